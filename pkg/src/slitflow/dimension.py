"""Slope intervals of a slit tree, the gap validator and Falconer's lower bound.

Each slit w of a tree owns the interval I(w) of inverse slopes centred at
x/y with radius 2/|w|^(r+1).  Nested, well separated families of such
intervals give a Cantor set whose dimension is bounded below by
liminf d_j, where d_j is computed from the level schedule through

    m_j   = rho_j delta_j |w0|^(r^j (r-1))
    eps_j = 1 / (16 * 5^(2r (r^j - 1)/(r-1)) * |w0|^(2 r^(j+1)))
    d_j   = log m_j / (log(m_j eps_j) - log(m_{j+1} eps_{j+1})).

|w0|^(r^j) is never formed: everything is carried as logarithms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .construction import ConstructionParams, k0_lower_bound_log
from .numerics import (
    DEFAULT_BUDGET,
    Ordering,
    Real,
    absolute,
    as_real,
    compare,
    enclose,
    fraction_to_str,
    rational,
    real_log,
    real_pow,
    to_float,
)
from .surface import Slit, signed_cross

REPORT_BITS = 64


@dataclass(frozen=True)
class SlopeInterval:
    center: Real
    radius: Real

    @property
    def diameter(self) -> Real:
        return self.radius * 2

    def to_json(self) -> dict:
        return {"center": to_float(self.center), "diameter": to_float(self.diameter)}


def interval_of(w: Slit, r: Fraction | int) -> SlopeInterval:
    """I(w): centre x/y, diameter 4/|w|^(r+1)."""
    return SlopeInterval(w.inverse_slope(), 2 / real_pow(w.height, Fraction(r) + 1))


def _decide(order: Ordering) -> bool | None:
    return None if order is Ordering.UNDECIDABLE else order in (Ordering.LESS, Ordering.EQUAL)


def check_gaps(tree, node, budget: int = DEFAULT_BUDGET) -> dict:
    """Nesting I(w') in I(w) for every child and gaps >= 1/(16 |w|^(2r)) between siblings."""
    params = tree.params
    kids = [tree.nodes[c].slit for c in node.children]
    delta = node.schedule.delta if node.schedule is not None else None
    return gap_report(node.slit, kids, params.r, delta, tree.root.slit, budget)


def gap_report(
    parent: Slit,
    children: Sequence[Slit],
    r: Fraction,
    delta: Fraction | None = None,
    w0: Slit | None = None,
    budget: int = DEFAULT_BUDGET,
) -> dict:
    r = Fraction(r)
    degraded = []
    if delta is not None and not delta < Fraction(1, 16):
        degraded.append("delta_j >= 1/16")
    if w0 is not None:
        order = compare(real_pow(w0.height, r * (r - 1)), rational(64), budget)
        if order is not Ordering.GREATER and order is not Ordering.EQUAL:
            degraded.append("|w0|^(r(r-1)) < 64")
    big = 2 / real_pow(parent.height, r + 1)
    nest_fail, undecided = [], 0
    radii = {}
    for child in children:
        small = 2 / real_pow(child.height, r + 1)
        radii[(child.m, child.n)] = small
        # theta' - theta = -(w x w') / (y y')
        shift = absolute(signed_cross(parent, child)) / absolute(parent.y * child.y)
        ok = _decide(compare(shift + small, big, budget))
        if ok is None:
            undecided += 1
        elif not ok:
            nest_fail.append([child.m, child.n])
    ordered = sorted(children, key=lambda s: to_float(s.inverse_slope()))
    gap_fail = []
    min_ratio = None
    need = 1 / (real_pow(parent.height, 2 * r) * 16)
    for a, b in zip(ordered, ordered[1:]):
        distance = absolute(signed_cross(a, b)) / absolute(a.y * b.y)
        gap = distance - radii[(a.m, a.n)] - radii[(b.m, b.n)]
        ratio = to_float(gap / need)
        min_ratio = ratio if min_ratio is None else min(min_ratio, ratio)
        ok = _decide(compare(need, gap, budget))
        if ok is None:
            undecided += 1
        elif not ok:
            gap_fail.append([[a.m, a.n], [b.m, b.n]])
    return {
        "children": len(children),
        "nesting_failures": nest_fail,
        "gap_failures": gap_fail,
        "gap_vacuous": len(children) < 2,
        "min_gap_ratio": min_ratio,
        "undecided": undecided,
        "degraded_hypotheses": degraded,
        "passed": not nest_fail and not gap_fail and undecided == 0,
    }


# ---------------------------------------------------------------------------
# Falconer sequences


def _iv(x: Real) -> tuple[float, float]:
    iv = enclose(x, REPORT_BITS, None)
    return float(iv.lo), float(iv.hi)


def _overlap(a: tuple[float, float], b: tuple[float, float]) -> bool:
    return a[0] <= b[1] and b[0] <= a[1]


def local_dimension_forms(
    log_w0: Real, r: Fraction, rd: Sequence[Fraction | Real], j: int
) -> dict[str, Real]:
    """d_j in its ratio, expanded and normalised forms.

    ``rd`` holds rho_i delta_i per level; entries j and j + 1 are used.
    """
    r = Fraction(r)
    rj = r**j
    log5 = real_log(rational(5))
    log_a = real_log(as_real(rd[j]))
    log_b = real_log(as_real(rd[j + 1]))

    def log_m(i: int, log_rd: Real) -> Real:
        return log_w0 * (r**i * (r - 1)) + log_rd

    def log_eps(i: int) -> Real:
        return -(real_log(rational(16)) + log5 * (2 * r * (r**i - 1) / (r - 1)) + log_w0 * (2 * r ** (i + 1)))

    ratio = log_m(j, log_a) / ((log_m(j, log_a) + log_eps(j)) - (log_m(j + 1, log_b) + log_eps(j + 1)))
    expanded = (log_w0 * (rj * (r - 1)) + log_a) / (
        log_w0 * (rj * (r * r - 1)) + log5 * (2 * r ** (j + 1)) - (log_b - log_a)
    )
    scale = log_w0 * (rj * (r - 1))
    normalised = (1 + log_a / scale) / ((r + 1) + log5 * (2 * r) / (log_w0 * (r - 1)) - (log_b - log_a) / scale)
    return {"ratio": ratio, "expanded": expanded, "normalised": normalised}


def falconer_from_sequences(m: Sequence[Real | Fraction | int], eps: Sequence[Real | Fraction | int]) -> list[Real]:
    """d_j = log m_j / (log(m_j eps_j) - log(m_{j+1} eps_{j+1})) for raw sequences."""
    if len(m) != len(eps):
        raise ValueError("m and eps must have equal length")
    logs = [real_log(as_real(a)) + real_log(as_real(b)) for a, b in zip(m, eps)]
    return [real_log(as_real(m[j])) / (logs[j] - logs[j + 1]) for j in range(len(m) - 1)]


def constant_schedule(m: Fraction | int, eps: Fraction, levels: int) -> tuple[list[Fraction], list[Fraction]]:
    """m_j = m and eps_j = eps (m eps)^j: every level contracts the product by m eps."""
    m, eps = Fraction(m), Fraction(eps)
    if not (m > 1 and 0 < m * eps < 1):
        raise ValueError("need m > 1 and 0 < m eps < 1")
    return [m] * levels, [eps * (m * eps) ** j for j in range(levels)]


def constant_closed_form(m: Fraction | int, eps: Fraction) -> Real:
    """log m / -log(m eps)."""
    m, eps = Fraction(m), Fraction(eps)
    return real_log(rational(m)) / -real_log(rational(m * eps))


def _tail_min(values: list[float], window: int | None) -> tuple[float | None, int]:
    if not values:
        return None, 0
    w = max(1, math.ceil(len(values) / 2)) if window is None else max(1, min(window, len(values)))
    return min(values[-w:]), w


def falconer_report(tree, tail_window: int | None = None, budget: int = DEFAULT_BUDGET) -> dict:
    """m_j, eps_j, d_j from the tree's schedule plus realised counts and summability partials."""
    if len(tree.schedules) < 2:
        raise ValueError("the Falconer report needs a tree of depth >= 2")
    params: ConstructionParams = tree.params
    r = params.r
    log_w0 = real_log(tree.root.slit.height)
    rd = [s.rho * s.delta for s in tree.schedules]
    rows = []
    log10 = math.log(10)
    for j in range(len(rd) - 1):
        forms = local_dimension_forms(log_w0, r, rd, j)
        ivs = {k: _iv(v) for k, v in forms.items()}
        agree = _overlap(ivs["ratio"], ivs["expanded"]) and _overlap(ivs["ratio"], ivs["normalised"])
        log_m = log_w0 * (r**j * (r - 1)) + real_log(rational(rd[j]))
        log_eps = -(
            real_log(rational(16))
            + real_log(rational(5)) * (2 * r * (r**j - 1) / (r - 1))
            + log_w0 * (2 * r ** (j + 1))
        )
        level_nodes = tree.level(j)
        kids = [len(n.children) for n in level_nodes]
        qualifying = [n.certificates.get("child_count", {}).get("qualifying") for n in level_nodes]
        rows.append(
            {
                "j": j,
                "region": tree.schedules[j].region,
                "rho_delta": fraction_to_str(rd[j]),
                "log10_m": to_float(log_m) / log10,
                "log10_eps": to_float(log_eps) / log10,
                "log10_m_eps": to_float(log_m + log_eps) / log10,
                "d": to_float(forms["ratio"]),
                "d_interval": {k: list(v) for k, v in ivs.items()},
                "forms_agree": agree,
                "realised_children_min": min(kids) if kids else 0,
                "realised_qualifying_min": min((q for q in qualifying if q is not None), default=None),
            }
        )
    d_values = [row["d"] for row in rows]
    liminf, window = _tail_min(d_values, tail_window)
    me = [row["log10_m_eps"] for row in rows]
    sum_delta = []
    acc = Fraction(0)
    for s in tree.schedules:
        acc += s.delta
        sum_delta.append(acc)
    branches = []
    consistent = True
    for path in tree.branches():
        partial = []
        total: Real = rational(0)
        for parent, child in zip(path, path[1:]):
            total = total + absolute(signed_cross(parent.slit, child.slit)) / 2
            partial.append(to_float(total))
            bound = rational(sum_delta[parent.level])
            if compare(total, bound, budget) not in (Ordering.LESS, Ordering.EQUAL):
                consistent = False
        branches.append({"leaf": path[-1].id, "cross_partials": partial})
    return {
        "r": fraction_to_str(r),
        "log10_w0": to_float(log_w0) / log10,
        "levels": rows,
        "d": d_values,
        "tail_window": window,
        "liminf_estimate": liminf,
        "limit_one_over_one_plus_r": 1 / (1 + float(r)),
        "m_eps_decreasing": all(a > b for a, b in zip(me, me[1:])),
        "forms_agree": all(row["forms_agree"] for row in rows),
        "sum_delta_partials": [float(x) for x in sum_delta],
        "branches": branches,
        "summability_consistent": consistent,
    }


def symbolic_falconer(
    params: ConstructionParams, levels: int = 12, log_qk0: Fraction | None = None, tail_window: int | None = None
) -> dict:
    """d_j for the Diophantine schedule with |w0| = q_k0^M' and q_k0 at the k0 threshold.

    rho_j delta_j = c0 / (rho q_k0 r^j); log q_k0 defaults to the smallest
    integer above the largest k0 requirement, so no power is ever formed.
    """
    r = params.r
    if log_qk0 is None:
        log_qk0 = Fraction(math.ceil(k0_lower_bound_log(params)))
    log_q = rational(log_qk0)
    log_w0 = log_q * params.M_prime
    base = real_log(rational(params.c0 / params.rho)) - log_q
    log_rd = [base - real_log(rational(r)) * j for j in range(levels + 1)]
    rows = []
    for j in range(levels):
        la, lb = log_rd[j], log_rd[j + 1]
        rj = r**j
        log5 = real_log(rational(5))
        d = (log_w0 * (rj * (r - 1)) + la) / (
            log_w0 * (rj * (r * r - 1)) + log5 * (2 * r ** (j + 1)) - (lb - la)
        )
        lo, hi = _iv(d)
        rows.append({"j": j, "d": to_float(d), "interval": [lo, hi]})
    d_values = [row["d"] for row in rows]
    liminf, window = _tail_min(d_values, tail_window)
    target = 0.5 - float(params.epsilon) if params.epsilon is not None else None
    return {
        "log_q_k0": float(log_qk0),
        "log_w0": to_float(log_w0),
        "levels": rows,
        "liminf_estimate": liminf,
        "tail_window": window,
        "limit": 1 / (1 + float(r)),
        "target": target,
        "exceeds_target": None if target is None else liminf > target,
    }
