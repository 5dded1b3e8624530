"""Level-by-level slit trees and their certificates.

A tree is grown from an initial slit w0 by a plan: consecutive segments of
levels, each naming the construction that produces children (Liouville
progressions, Diophantine children filtered by normality, or Delta children
of good slits) together with the schedule (alpha_j, delta_j, rho_j).  Every
parent records machine-checked certificates for the properties the schedule
is supposed to guarantee; :func:`audit_tree` recomputes all of them from a
JSON dump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from . import construction as cons
from .bestapprox import BestApprox
from .errors import NotFoundAtCap, PreconditionViolation, ScheduleInfeasible, UndecidableError
from .numerics import (
    DEFAULT_BUDGET,
    SUP,
    Norm,
    Ordering,
    Real,
    Verdict,
    compare,
    fraction_to_str,
    format_real,
    parse_real,
    rational,
    real_log,
    real_pow,
    to_float,
)
from .surface import Context, Loop, Slit, cross

REGIONS = ("liouville", "diophantine", "bounded", "transition")


@dataclass(frozen=True)
class LevelSchedule:
    region: str
    alpha: Fraction | None
    delta: Fraction
    rho: Fraction

    def to_json(self) -> dict:
        return {
            "region": self.region,
            "alpha": None if self.alpha is None else fraction_to_str(self.alpha),
            "delta": fraction_to_str(self.delta),
            "rho": fraction_to_str(self.rho),
        }


@dataclass
class Segment:
    """A run of levels sharing one construction.

    ``alpha`` is the starting normality (diophantine) or goodness (bounded)
    parameter; ``q_prev`` is q_k~, the previous element of l_N, used by the
    bounded and transition schedules.
    """

    region: str
    levels: int
    alpha: Fraction | None = None
    q_prev: int | None = None

    def to_json(self) -> dict:
        return {
            "region": self.region,
            "levels": self.levels,
            "alpha": None if self.alpha is None else fraction_to_str(self.alpha),
            "q_prev": self.q_prev,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Segment":
        region = data["region"]
        if region not in REGIONS:
            raise PreconditionViolation(f"unknown region {region!r}")
        alpha = data.get("alpha")
        return cls(region, int(data["levels"]), None if alpha is None else Fraction(alpha), data.get("q_prev"))


def level_schedules(
    plan: Sequence[Segment], params: cons.ConstructionParams, q_k: int | None, depth: int
) -> list[LevelSchedule]:
    """Schedule of levels 0 .. depth-1 (the levels that produce children)."""
    rho, n = params.rho, params.depth
    out: list[LevelSchedule] = []
    for seg in plan:
        for i in range(seg.levels):
            if seg.region == "liouville":
                if q_k is None:
                    raise PreconditionViolation("Liouville levels need a best approximation q_k")
                out.append(LevelSchedule("liouville", None, Fraction(4, q_k), Fraction(1, 8)))
            elif seg.region == "diophantine":
                alpha0 = seg.alpha if seg.alpha is not None else _alpha_k(q_k, rho, n)
                alpha = alpha0 * params.r**i
                out.append(LevelSchedule("diophantine", alpha, 1 / alpha, params.c0 / (4 * rho ** (n + 1))))
            elif seg.region == "bounded":
                if seg.alpha is None and seg.q_prev is None:
                    raise PreconditionViolation("bounded levels need alpha or q_prev")
                alpha0 = seg.alpha if seg.alpha is not None else _alpha_k(seg.q_prev, rho, n)
                alpha = alpha0 - Fraction(i, 2)
                if alpha <= 1:
                    raise ScheduleInfeasible(f"bounded-region alpha fell to {alpha}")
                out.append(LevelSchedule("bounded", alpha, 1 / alpha, params.c0 / 2))
            else:
                if q_k is None or seg.q_prev is None:
                    raise PreconditionViolation("transition levels need q_k and q_prev")
                out.append(
                    LevelSchedule(
                        "transition", None, 8 * rho**n / seg.q_prev, Fraction(seg.q_prev) / (16 * rho**n * q_k)
                    )
                )
    if len(out) < depth:
        raise PreconditionViolation(f"plan covers {len(out)} levels, depth {depth} requested")
    return out[:depth]


def _alpha_k(q: int | None, rho: Fraction, n: int) -> Fraction:
    if q is None:
        raise PreconditionViolation("alpha_k needs q_k")
    return Fraction(q) / (4 * rho**n)


def finite_ell_schedules(params: cons.ConstructionParams, depth: int) -> list[LevelSchedule]:
    """alpha_j = alpha r^j with alpha = 2 / rho^n, delta_j = 1/alpha_j, rho_j = c0/(4 rho^(n+1))."""
    rho, n = params.rho, params.depth
    alpha = 2 / rho**n
    return [
        LevelSchedule("diophantine", alpha * params.r**j, 1 / (alpha * params.r**j), params.c0 / (4 * rho ** (n + 1)))
        for j in range(depth)
    ]


# ---------------------------------------------------------------------------
# nodes and trees


@dataclass
class TreeNode:
    id: int
    parent: int | None
    level: int
    slit: Slit
    v: Loop | None = None
    schedule: LevelSchedule | None = None
    children: list[int] = field(default_factory=list)
    certificates: dict = field(default_factory=dict)

    @property
    def region(self) -> str:
        if self.schedule is not None:
            return self.schedule.region
        return "initial" if self.parent is None else "leaf"

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "parent": self.parent,
            "level": self.level,
            "m": self.slit.m,
            "n": self.slit.n,
            "height": to_float(self.slit.height),
            "v": None if self.v is None else [self.v.p, self.v.q],
            "region": self.region,
            "schedule": None if self.schedule is None else self.schedule.to_json(),
            "children": self.children,
            "certificates": self.certificates,
        }


@dataclass
class SlitTree:
    context: Context
    params: cons.ConstructionParams
    nodes: list[TreeNode]
    schedules: list[LevelSchedule]
    depth: int
    meta: dict = field(default_factory=dict)

    @property
    def root(self) -> TreeNode:
        return self.nodes[0]

    def level(self, j: int) -> list[TreeNode]:
        return [node for node in self.nodes if node.level == j]

    def branches(self) -> Iterator[list[TreeNode]]:
        """Root-to-leaf paths."""
        for node in self.nodes:
            if node.children:
                continue
            path = [node]
            while path[-1].parent is not None:
                path.append(self.nodes[path[-1].parent])
            yield path[::-1]

    def failures(self) -> list[dict]:
        out = []
        for node in self.nodes:
            for name, cert in node.certificates.items():
                if isinstance(cert, dict) and cert.get("gated", True) and cert.get("passed") is False:
                    out.append({"node": node.id, "certificate": name})
        return out

    def to_json(self) -> dict:
        return {
            "context": {"lambda": format_real(self.context[0]), "mu": format_real(self.context[1])},
            "params": self.params.to_json(),
            "depth": self.depth,
            "schedules": [s.to_json() for s in self.schedules],
            "meta": self.meta,
            "nodes": [n.to_json() for n in self.nodes],
            "failures": self.failures(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "SlitTree":
        ctx = (parse_real(data["context"]["lambda"]), parse_real(data["context"]["mu"]))
        params = cons.ConstructionParams.from_json(data["params"])
        schedules = [
            LevelSchedule(
                s["region"],
                None if s["alpha"] is None else Fraction(s["alpha"]),
                Fraction(s["delta"]),
                Fraction(s["rho"]),
            )
            for s in data["schedules"]
        ]
        nodes = []
        for nd in data["nodes"]:
            sched = nd.get("schedule")
            nodes.append(
                TreeNode(
                    id=nd["id"],
                    parent=nd["parent"],
                    level=nd["level"],
                    slit=Slit(nd["m"], nd["n"], ctx),
                    v=None if nd["v"] is None else Loop(*nd["v"]),
                    schedule=None if sched is None else schedules[nd["level"]],
                    children=list(nd["children"]),
                    certificates=nd.get("certificates", {}),
                )
            )
        return cls(ctx, params, nodes, schedules, data["depth"], data.get("meta", {}))


# ---------------------------------------------------------------------------
# certificates


def _ok(order: Ordering, want: tuple[Ordering, ...]) -> bool:
    if order is Ordering.UNDECIDABLE:
        raise UndecidableError("certificate comparison undecidable at budget")
    return order in want


def sandwich_certificate(parent: Slit, children: Sequence[Slit], r: Fraction, budget: int) -> dict:
    """|w|^r < |w'| < 5 |w|^r for every child."""
    low = real_pow(parent.height, r)
    bad = []
    for child in children:
        above = _ok(compare(low, child.height, budget), (Ordering.LESS,))
        below = _ok(compare(child.height, low * 5, budget), (Ordering.LESS,))
        if not (above and below):
            bad.append([child.m, child.n])
    return {"checked": len(children), "failures": bad, "passed": not bad}


def cross_certificate(parent: Slit, vs: Sequence[Loop], delta: Fraction, budget: int) -> dict:
    """|w x v| < delta_j for every child loop."""
    bad = []
    worst = 0.0
    for v in vs:
        value = cross(parent, (v.p, v.q))
        worst = max(worst, to_float(value))
        if not _ok(compare(value, rational(delta), budget), (Ordering.LESS,)):
            bad.append([v.p, v.q])
    return {"checked": len(vs), "max_cross": worst, "delta": float(delta), "failures": bad, "passed": not bad}


def count_bound(parent: Slit, sched: LevelSchedule, r: Fraction) -> Real:
    """rho_j |w|^(r-1) delta_j, the child count the schedule promises."""
    return real_pow(parent.height, r - 1) * (sched.rho * sched.delta)


def ieq_normal_hypothesis(w: Slit, alpha: Fraction, params: cons.ConstructionParams, budget: int) -> dict:
    """|w|^((r-1)^2) >= max(480 alpha^2 rho^(n+3)/c0, c) where n is the schedule depth."""
    r, rho = params.r, params.rho
    needed = max(480 * alpha**2 * rho ** (params.depth + 3) / params.c0, params.c)
    lhs = real_log(w.height) * (r - 1) ** 2
    rhs = real_log(rational(needed))
    holds = _ok(compare(lhs, rhs, budget), (Ordering.GREATER, Ordering.EQUAL))
    return {"holds": holds, "log_lhs": to_float(lhs), "log_rhs": to_float(rhs), "gated": False, "passed": holds}


# ---------------------------------------------------------------------------
# expansion of one node


@dataclass
class Expansion:
    chosen: list[tuple[Slit, Loop]]
    qualifying: int
    scanned: int
    truncated: bool
    certificates: dict


def _child_alpha(sched: LevelSchedule, next_sched: LevelSchedule | None, r: Fraction) -> Fraction | None:
    if next_sched is not None and next_sched.alpha is not None:
        return next_sched.alpha
    if sched.alpha is not None:
        return sched.alpha * r if sched.region == "diophantine" else sched.alpha - Fraction(1, 2)
    return None


def _expand_diophantine(
    w: Slit, sched: LevelSchedule, child_alpha: Fraction, params, need: int, branching: int, cap: int, budget: int
) -> Expansion:
    chosen: list[tuple[Slit, Loop]] = []
    qualifying = scanned = 0
    undecided = 0
    truncated = False
    for child, v in cons.iter_diophantine_children(w, sched.alpha, params.r, budget):
        if scanned >= cap:
            truncated = True
            break
        scanned += 1
        verdict = cons.is_normal(child, child_alpha, params, budget).verdict
        if verdict is Verdict.UNDECIDABLE:
            undecided += 1
            continue
        if verdict is Verdict.TRUE:
            qualifying += 1
            if len(chosen) < branching:
                chosen.append((child, v))
        if qualifying >= need and len(chosen) >= branching:
            break
    certs = {"normal_children": {"child_alpha": fraction_to_str(child_alpha), "undecided": undecided, "gated": False}}
    return Expansion(chosen, qualifying, scanned, truncated, certs)


def _expand_bounded(w: Slit, sched: LevelSchedule, params, need: int, branching: int, cap: int, budget: int) -> Expansion:
    beta = real_pow(w.height, params.r - 1) / 2
    listing = cons.enumerate_delta(w, sched.alpha, beta, cap=cap, budget=budget)
    goods = cons.check_good_children(w, sched.alpha, beta, listing, budget)
    good_count = len(listing)
    lemma = {"gated": False}
    if _ok(compare(rational(sched.alpha), beta * cons.C0, budget), (Ordering.LESS,)):
        bound = cons.good_count_bound(sched.alpha, beta)
        lemma = {
            "applies": True,
            "bound": to_float(bound),
            "count": good_count,
            "passed": _ok(compare(rational(good_count), bound, budget), (Ordering.GREATER, Ordering.EQUAL)),
        }
    certs = {"good_children": goods, "delta_count": lemma, "beta": to_float(beta)}
    return Expansion(listing.children[:branching], good_count, good_count, listing.truncated, certs)


def _expand_liouville(
    w: Slit, sched: LevelSchedule, params, ba: BestApprox, q_next: int | None, branching: int, cap: int, norm: Norm, budget: int
) -> Expansion:
    # the progression length is exact arithmetic; only a prefix is materialised and checked
    sample = min(cap, max(branching, 64))
    lam = cons.enumerate_lambda(w, ba, params.r, q_next=q_next, cap=sample, norm=norm, budget=budget)
    checks = dict(lam.checks)
    checks["raw_count"] = lam.raw_count
    checks["dedup_count"] = lam.dedup_count
    checks["materialised"] = len(lam)
    return Expansion(lam.children[:branching], lam.dedup_count, len(lam), False, {"lambda": checks})


def expand_node(
    w: Slit,
    sched: LevelSchedule,
    next_sched: LevelSchedule | None,
    params: cons.ConstructionParams,
    ba: BestApprox | None,
    q_next: int | None,
    branching: int,
    cap: int,
    norm: Norm,
    budget: int,
) -> Expansion:
    need = max(1, math.ceil(to_float(count_bound(w, sched, params.r))))
    if sched.region == "diophantine":
        child_alpha = _child_alpha(sched, next_sched, params.r)
        exp = _expand_diophantine(w, sched, child_alpha, params, need, branching, cap, budget)
    elif sched.region == "bounded":
        exp = _expand_bounded(w, sched, params, need, branching, cap, budget)
    else:
        if ba is None:
            raise PreconditionViolation("Liouville levels need a best approximation vector")
        exp = _expand_liouville(w, sched, params, ba, q_next, branching, cap, norm, budget)
    bound = count_bound(w, sched, params.r)
    exp.certificates["child_count"] = {
        "bound": to_float(bound),
        "qualifying": exp.qualifying,
        "scanned": exp.scanned,
        "truncated": exp.truncated,
        "met": exp.qualifying >= to_float(bound),
        "gated": False,
    }
    return exp


# ---------------------------------------------------------------------------
# building


def build_tree(
    context: Context,
    params: cons.ConstructionParams,
    depth: int,
    w0: Slit,
    plan: Sequence[Segment] | None = None,
    ba: BestApprox | None = None,
    q_next: int | None = None,
    branching: int = 2,
    cap: int = 10**5,
    norm: Norm = SUP,
    budget: int = DEFAULT_BUDGET,
) -> SlitTree:
    """Grow a tree of the given depth from w0.

    In finite-ellN mode the plan is ignored and the schedule
    alpha_j = alpha r^j is used.  Children are taken in increasing height;
    at most ``branching`` are kept per node while the scan continues until
    the schedule's count bound is reached, ``cap`` candidates are seen, or
    candidates run out.
    """
    if depth < 0:
        raise PreconditionViolation("depth must be non-negative")
    if params.mode == "full-schedule":
        raise PreconditionViolation("full-schedule trees are built through build_full_tree")
    if params.mode == "finite-ellN":
        schedules = finite_ell_schedules(params, depth)
    else:
        schedules = level_schedules(plan or [], params, None if ba is None else ba.q, depth)
    if compare(w0.y, rational(0), budget) is not Ordering.GREATER:
        raise PreconditionViolation("w0 must point upwards (mu + n > 0)")
    root = TreeNode(0, None, 0, w0)
    nodes = [root]
    frontier = [root]
    warnings = list(params.warnings)
    for j in range(depth):
        sched = schedules[j]
        next_sched = schedules[j + 1] if j + 1 < depth else None
        new_frontier: list[TreeNode] = []
        for node in frontier:
            node.schedule = sched
            exp = expand_node(node.slit, sched, next_sched, params, ba, q_next, branching, cap, norm, budget)
            _node_certificates(node, exp, sched, params, ba, budget)
            for child, v in exp.chosen:
                kid = TreeNode(len(nodes), node.id, j + 1, child, v)
                nodes.append(kid)
                node.children.append(kid.id)
                new_frontier.append(kid)
        frontier = new_frontier
        if not frontier:
            warnings.append(f"no children at level {j + 1}")
            break
    for node in frontier:
        _leaf_certificates(node, schedules, params, budget)
    meta = {
        "mode": params.mode,
        "branching": branching,
        "cap": cap,
        "plan": [s.to_json() for s in plan or []],
        "q_k": None if ba is None else ba.q,
        "q_next_lower": q_next,
        "w0": {"m": w0.m, "n": w0.n, "height": to_float(w0.height)},
        "warnings": warnings,
        "norm": norm.id,
        "budget": budget,
    }
    tree = SlitTree(context, params, nodes, schedules, depth, meta)
    from .dimension import check_gaps

    for node in tree.nodes:
        if node.children:
            node.certificates["gaps"] = check_gaps(tree, node, budget=budget)
    return tree


def _node_certificates(
    node: TreeNode, exp: Expansion, sched: LevelSchedule, params: cons.ConstructionParams, ba, budget: int
) -> None:
    kids = [c for c, _ in exp.chosen]
    certs = node.certificates
    certs["height_sandwich"] = sandwich_certificate(node.slit, kids, params.r, budget)
    certs["cross_schedule"] = cross_certificate(node.slit, [v for _, v in exp.chosen], sched.delta, budget)
    certs.update(exp.certificates)
    if sched.region == "diophantine":
        result = cons.is_normal(node.slit, sched.alpha, params, budget)
        certs["normal"] = {**result.to_json(), "alpha": fraction_to_str(sched.alpha), "passed": result.verdict is Verdict.TRUE}
        certs["ieq_normal"] = ieq_normal_hypothesis(node.slit, sched.alpha, params, budget)
    elif sched.region == "bounded":
        beta = real_pow(node.slit.height, params.r - 1) / 2
        verdict = cons.is_good(node.slit, sched.alpha, beta, budget) if sched.alpha < to_float(beta) else Verdict.FALSE
        certs["good"] = {"alpha": fraction_to_str(sched.alpha), "verdict": verdict.value, "gated": False,
                         "passed": verdict is Verdict.TRUE}
    elif ba is not None:
        d = cons.d_value(node.slit, ba)
        certs["gcd"] = {"d": d, "passed": d <= 2}


def _leaf_certificates(node: TreeNode, schedules: Sequence[LevelSchedule], params, budget: int) -> None:
    if node.level == 0:
        return
    parent_sched = schedules[node.level - 1]
    if parent_sched.region != "diophantine":
        return
    alpha = schedules[node.level].alpha if node.level < len(schedules) else parent_sched.alpha * params.r
    result = cons.is_normal(node.slit, alpha, params, budget)
    node.certificates["normal"] = {**result.to_json(), "alpha": fraction_to_str(alpha), "passed": result.verdict is Verdict.TRUE}


def build_full_tree(
    context: Context,
    params: cons.ConstructionParams,
    seq: Sequence[BestApprox],
    depth: int,
    cap_bits: int = 4096,
    norm: Norm = SUP,
    budget: int = DEFAULT_BUDGET,
) -> SlitTree:
    """Honest schedule: pick k0 in l_N, then place w0 at height >= q_k0^M'.

    At any desk-scale input this stops with ScheduleInfeasible (no computed
    denominator satisfies the k0 requirement) or NotFoundAtCap (w0 would need
    more than ``cap_bits`` bits).
    """
    qs = [b.q for b in seq]
    ks = cons._ell_n_logs(qs, params.N, budget)
    if not ks:
        raise ScheduleInfeasible("l_N is empty for these denominators; use the finite-ellN mode")
    need = cons.k0_lower_bound_log(params, norm)
    usable = [k for k in ks if math.log(qs[k - 1]) >= need]
    if not usable:
        raise ScheduleInfeasible(
            f"k0 needs log q_k0 >= {need:.6g}; the largest computed denominator has log {math.log(qs[-1]):.6g}"
        )
    k0 = usable[0]
    ba = seq[k0 - 1]
    cons.initial_slit(context, ba, params, q_next=qs[k0] if k0 < len(qs) else None, cap_bits=cap_bits, norm=norm, budget=budget)
    raise NotFoundAtCap("full-schedule trees beyond w0 exceed every desk-scale cap")


# ---------------------------------------------------------------------------
# audit


def audit_tree(data: dict | SlitTree, budget: int = DEFAULT_BUDGET) -> dict:
    """Recompute every gated certificate from the dump and compare with the recorded ones."""
    from .dimension import check_gaps

    tree = data if isinstance(data, SlitTree) else SlitTree.from_json(data)
    r = tree.params.r
    problems: list[dict] = []
    recomputed = 0
    for node in tree.nodes:
        if not node.children:
            continue
        sched = tree.schedules[node.level]
        kids = [tree.nodes[c] for c in node.children]
        for kid in kids:
            dm, dn = kid.slit.m - node.slit.m, kid.slit.n - node.slit.n
            if kid.v is None or (dm, dn) != (2 * kid.v.p, 2 * kid.v.q):
                problems.append({"node": kid.id, "check": "child = parent + 2v"})
        fresh = {
            "height_sandwich": sandwich_certificate(node.slit, [k.slit for k in kids], r, budget),
            "cross_schedule": cross_certificate(node.slit, [k.v for k in kids if k.v is not None], sched.delta, budget),
            "gaps": check_gaps(tree, node, budget=budget),
        }
        if sched.region == "diophantine":
            for kid in kids:
                alpha = (
                    tree.schedules[kid.level].alpha
                    if kid.level < len(tree.schedules)
                    else sched.alpha * r
                )
                verdict = cons.is_normal(kid.slit, alpha, tree.params, budget).verdict
                if verdict is not Verdict.TRUE:
                    problems.append({"node": kid.id, "check": "child normality"})
        for name, cert in fresh.items():
            recomputed += 1
            if not cert["passed"]:
                problems.append({"node": node.id, "check": name})
            recorded = node.certificates.get(name, {})
            if recorded.get("passed") != cert["passed"]:
                problems.append({"node": node.id, "check": f"{name} differs from the dump"})
    return {"nodes": len(tree.nodes), "recomputed": recomputed, "problems": problems, "passed": not problems}
