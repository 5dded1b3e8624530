"""Simultaneous best approximation vectors, nearest rational lines and the
Perez-Marco sum analyzer.

The per-denominator search uses a scaled-integer kernel: each coordinate of x
is bracketed as ``[lo, hi] / scale`` with integer ``lo, hi``, so rounding and
norm keys become integer arithmetic.  Whenever the brackets cannot decide a
comparison the kernel falls back to exact :class:`Real` arithmetic, which in
turn reports undecidable outcomes instead of guessing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cmp_to_key
from typing import Sequence

from .numerics import (
    DEFAULT_BUDGET,
    ExactReal,
    Norm,
    Ordering,
    RatInterval,
    Real,
    UndecidableError,
    Verdict,
    absolute,
    as_real,
    compare,
    enclose,
    floor_real,
    interval_log,
    norm_eval,
    norm_key,
    norm_of_reals,
    rational,
    round_real,
    to_float,
)

Pair = tuple[Real, Real]


@dataclass(frozen=True)
class BestApprox:
    p1: int
    p2: int
    q: int
    err: Real
    err_key: Real
    norm_id: str

    def to_json(self) -> dict:
        return {"p1": self.p1, "p2": self.p2, "q": self.q, "err": to_float(self.err)}


# ---------------------------------------------------------------------------
# scaled-integer brackets


@dataclass(frozen=True)
class _Bracket:
    """x_i in [lo_i, hi_i] / scale for i = 1, 2."""

    scale: int
    lo: tuple[int, int]
    hi: tuple[int, int]

    @property
    def exact(self) -> bool:
        return self.lo == self.hi


def _bracket(x: Pair, q_max: int) -> _Bracket:
    if all(isinstance(c, ExactReal) and c.kind == "rational" for c in x):
        values = [c.rational_part for c in x]  # type: ignore[union-attr]
        scale = math.lcm(*(v.denominator for v in values))
        nums = tuple(int(v * scale) for v in values)
        return _Bracket(scale, nums, nums)  # type: ignore[arg-type]
    bits = 96 + 2 * max(1, q_max).bit_length()
    caps = [c.max_precision() for c in x]
    finite = [c for c in caps if c is not None]
    if finite:
        bits = min(bits, min(finite))
    scale = 1 << bits
    lo, hi = [], []
    for c in x:
        cap = c.max_precision()
        iv = c._raw_enclose(bits if cap is None else min(bits, cap))
        lo.append(math.floor(iv.lo * scale))
        hi.append(math.ceil(iv.hi * scale))
    return _Bracket(scale, tuple(lo), tuple(hi))  # type: ignore[arg-type]


def _round_half_down(num: int, scale: int) -> int:
    # ceil(num/scale - 1/2)
    return -((scale - 2 * num) // (2 * scale))


def _abs_iv(lo: int, hi: int) -> tuple[int, int]:
    if lo >= 0:
        return lo, hi
    if hi <= 0:
        return -hi, -lo
    return 0, max(-lo, hi)


def _key_interval(norm_id: str, e1: tuple[int, int], e2: tuple[int, int]) -> tuple[int, int]:
    a1, a2 = _abs_iv(*e1), _abs_iv(*e2)
    if norm_id == "sup":
        return max(a1[0], a2[0]), max(a1[1], a2[1])
    if norm_id == "l1":
        return a1[0] + a2[0], a1[1] + a2[1]
    return a1[0] * a1[0] + a2[0] * a2[0], a1[1] * a1[1] + a2[1] * a2[1]


def _exact_errors(x: Pair, q: int, p1: int, p2: int) -> tuple[Real, Real]:
    return x[0] * q - p1, x[1] * q - p2


class _Kernel:
    """Minimal error at each denominator for one point and one norm."""

    def __init__(self, x: Pair, norm: Norm, q_max: int, budget: int) -> None:
        self.x = x
        self.norm = norm
        self.budget = budget
        self.fast = norm.id in ("sup", "l1", "l2")
        self.bracket = _bracket(x, q_max)

    def key_of(self, q: int, p1: int, p2: int) -> Real:
        e1, e2 = _exact_errors(self.x, q, p1, p2)
        return norm_key(self.norm, e1, e2, self.budget)

    def value_of(self, q: int, p1: int, p2: int) -> Real:
        e1, e2 = _exact_errors(self.x, q, p1, p2)
        return norm_of_reals(self.norm, e1, e2, self.budget)

    def nearest(self, q: int) -> tuple[int, int, tuple[int, int] | None]:
        """Minimizing (p1, p2) at q plus an integer key bracket when available."""
        if not self.fast:
            p1, p2 = self._custom_nearest(q)
            return p1, p2, None
        b = self.bracket
        ps: list[int] = []
        errs: list[tuple[int, int]] = []
        certain = True
        for i in range(2):
            t, u = q * b.lo[i], q * b.hi[i]
            p_lo, p_hi = _round_half_down(t, b.scale), _round_half_down(u, b.scale)
            if p_lo != p_hi:
                certain = False
                p_lo = round_real(self.x[i] * q, self.budget)
            ps.append(p_lo)
            errs.append((t - p_lo * b.scale, u - p_lo * b.scale))
        key = _key_interval(self.norm.id, errs[0], errs[1]) if certain else None
        return ps[0], ps[1], key

    def _custom_nearest(self, q: int) -> tuple[int, int]:
        reach = self.norm.equiv_upper**2 / 2
        ranges = []
        for i in range(2):
            iv = enclose(self.x[i], 32, budget=None) if self.x[i].max_precision() is None else self.x[i]._raw_enclose(
                min(32, self.x[i].max_precision() or 0)
            )
            ranges.append(range(math.floor(q * iv.lo - reach) - 1, math.ceil(q * iv.hi + reach) + 2))
        best: tuple[int, int] | None = None
        best_val: Real | None = None
        for p1 in ranges[0]:
            for p2 in ranges[1]:
                val = self.value_of(q, p1, p2)
                if best_val is None:
                    best, best_val = (p1, p2), val
                    continue
                order = compare(val, best_val, self.budget)
                if order is Ordering.UNDECIDABLE:
                    raise UndecidableError(f"cannot order candidates at q={q}")
                if order is Ordering.LESS:
                    best, best_val = (p1, p2), val
        assert best is not None
        return best


def best_approx_sequence(
    x: Pair, norm: Norm, q_max: int, budget: int = DEFAULT_BUDGET
) -> list[BestApprox]:
    """All best approximation vectors with denominator at most ``q_max``."""
    if q_max < 1:
        raise ValueError("q_max must be at least 1")
    x = (as_real(x[0]), as_real(x[1]))
    kernel = _Kernel(x, norm, q_max, budget)
    out: list[BestApprox] = []
    best_iv: tuple[int, int] | None = None
    best_key: Real | None = None
    for q in range(1, q_max + 1):
        p1, p2, key_iv = kernel.nearest(q)
        if best_key is not None:
            if key_iv is not None and best_iv is not None:
                if key_iv[0] >= best_iv[1]:
                    continue
                accept = key_iv[1] < best_iv[0]
            else:
                accept = False
            if not accept:
                order = compare(kernel.key_of(q, p1, p2), best_key, budget)
                if order is Ordering.UNDECIDABLE:
                    raise UndecidableError(f"error at q={q} not separable from the running minimum")
                if order is not Ordering.LESS:
                    continue
        e1, e2 = _exact_errors(x, q, p1, p2)
        best_key = norm_key(norm, e1, e2, budget)
        best_iv = key_iv
        out.append(BestApprox(p1, p2, q, norm_of_reals(norm, e1, e2, budget), best_key, norm.id))
        if isinstance(best_key, ExactReal) and best_key.is_zero():
            break
        if key_iv is not None and key_iv == (0, 0):
            break
    return out


def denominators(seq: Sequence[BestApprox]) -> list[int]:
    return [b.q for b in seq]


def is_best_approx(
    x: Pair,
    norm: Norm,
    p1: int,
    p2: int,
    q: int,
    context: Sequence[BestApprox] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> Verdict:
    """Definition check: strict dominance over smaller q, weak minimality at q."""
    if q < 1 or math.gcd(math.gcd(p1, p2), q) != 1:
        raise ValueError("(p1, p2, q) must be primitive with q >= 1")
    x = (as_real(x[0]), as_real(x[1]))
    kernel = _Kernel(x, norm, q, budget)
    own = kernel.key_of(q, p1, p2)
    n1, n2, _ = kernel.nearest(q)
    order = compare(own, kernel.key_of(q, n1, n2), budget)
    if order is Ordering.UNDECIDABLE:
        return Verdict.UNDECIDABLE
    if order is Ordering.GREATER:
        return Verdict.FALSE
    if q == 1:
        return Verdict.TRUE
    if context is None or not context or context[-1].q < q - 1 and not _terminal(context):
        context = best_approx_sequence(x, norm, q - 1, budget)
    earlier = [b for b in context if b.q < q]
    if not earlier:
        return Verdict.TRUE
    order = compare(own, earlier[-1].err_key, budget)
    if order is Ordering.UNDECIDABLE:
        return Verdict.UNDECIDABLE
    return Verdict.of(order is Ordering.LESS)


def _terminal(seq: Sequence[BestApprox]) -> bool:
    last = seq[-1].err_key
    return isinstance(last, ExactReal) and last.is_zero()


def thm210_predicate(
    x: Pair, p1: int, p2: int, q: int, norm: Norm, budget: int = DEFAULT_BUDGET
) -> Verdict:
    """||x - p/q|| < 1/(2 q^2), which forces p/q to be a best approximation."""
    if q < 1 or math.gcd(math.gcd(p1, p2), q) != 1:
        raise ValueError("(p1, p2, q) must be primitive with q >= 1")
    e1 = as_real(x[0]) - Fraction(p1, q)
    e2 = as_real(x[1]) - Fraction(p2, q)
    bound = Fraction(1, 2 * q * q)
    if norm.id == "l2":
        order = compare(e1 * e1 + e2 * e2, rational(bound * bound), budget)
    else:
        order = compare(norm_of_reals(norm, e1, e2, budget), rational(bound), budget)
    if order is Ordering.UNDECIDABLE:
        return Verdict.UNDECIDABLE
    return Verdict.of(order is Ordering.LESS)


def error_at_least(ba: BestApprox, bound: Fraction, budget: int = DEFAULT_BUDGET) -> Verdict:
    """Exact check of bound <= ||q x - p|| using the stored monotone key."""
    target = bound * bound if ba.norm_id == "l2" else bound
    order = compare(rational(target), ba.err_key, budget)
    if order is Ordering.UNDECIDABLE:
        return Verdict.UNDECIDABLE
    return Verdict.of(order in (Ordering.LESS, Ordering.EQUAL))


def lower_bound_report(seq: Sequence[BestApprox], budget: int = DEFAULT_BUDGET) -> dict:
    """1/(2 q_{k+1}) <= ||q_k x - p_k|| for every consecutive pair."""
    failures = []
    undecided = []
    for cur, nxt in zip(seq, seq[1:]):
        verdict = error_at_least(cur, Fraction(1, 2 * nxt.q), budget)
        if verdict is Verdict.FALSE:
            failures.append(cur.q)
        elif verdict is Verdict.UNDECIDABLE:
            undecided.append(cur.q)
    return {
        "pairs": max(0, len(seq) - 1),
        "failures": failures,
        "undecidable": undecided,
        "passed": not failures and not undecided,
    }


def upper_ratio_report(seq: Sequence[BestApprox]) -> dict:
    """Empirical max of ||q_k x - p_k|| * sqrt(q_{k+1}); no constant is asserted."""
    ratios = [to_float(cur.err) * math.sqrt(nxt.q) for cur, nxt in zip(seq, seq[1:])]
    return {"ratios": ratios, "max_ratio": max(ratios) if ratios else None}


# Dirichlet-type constants: every norm here admits q <= Q with ||q x - p|| <= C1/sqrt(Q)
DIRICHLET_CONSTANT = {"sup": Fraction(1), "l1": Fraction(2), "l2": Fraction(3, 2)}


def dirichlet_constant(norm: Norm) -> Fraction:
    return DIRICHLET_CONSTANT.get(norm.id, norm.equiv_upper)


def next_denominator_bound(seq: Sequence[BestApprox], q_max: int, use_lower_inequality: bool = False) -> dict:
    """Lower bound on the denominator after the last computed one.

    Exhaustive search to ``q_max`` proves q_{k+1} > q_max.  Optionally the
    consecutive-pair inequality 1/(2 q_{k+1}) <= err_k adds 1/(2 err_k).
    """
    bound = q_max + 1
    source = "exhaustive-search"
    if use_lower_inequality and seq:
        err = seq[-1].err
        if not (isinstance(err, ExactReal) and err.is_zero()):
            hi = enclose(err, 64, budget=None).hi if err.max_precision() is None else err._raw_enclose(0).hi
            candidate = math.ceil(1 / (2 * hi))
            if candidate > bound:
                bound, source = candidate, "theorem-derived"
    return {"bound": bound, "source": source}


# ---------------------------------------------------------------------------
# nearest rational affine lines


@dataclass(frozen=True)
class AffineLine:
    a: int
    b: int
    c: int
    height: Real
    distance: Real

    def to_json(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "c": self.c,
            "height": to_float(self.height),
            "distance": to_float(self.distance),
        }


@dataclass
class NearestLines:
    lines: list[AffineLine]
    height_max: int
    uniquely_rational: bool = False

    def to_json(self) -> dict:
        return {
            "height_max": self.height_max,
            "uniquely_rational": self.uniquely_rational,
            "lines": [l.to_json() for l in self.lines],
        }


def _height_key(norm: Norm, a: int, b: int) -> Real:
    if norm.id == "l2":
        return rational(a * a + b * b)
    return norm_eval(norm, (a, b))


def _round_half_up(num: int, scale: int) -> int:
    return (2 * num + scale) // (2 * scale)


def nearest_affine_lines(
    x: Pair, norm: Norm, height_max: int, budget: int = DEFAULT_BUDGET
) -> NearestLines:
    """Record-breaking lines a*x1 + b*x2 + c = 0 in order of increasing height."""
    if height_max < 1:
        raise ValueError("height_max must be at least 1")
    x = (as_real(x[0]), as_real(x[1]))
    reach = math.floor(norm.equiv_upper * height_max)
    pairs = [
        (a, b)
        for a in range(0, reach + 1)
        for b in range(-reach, reach + 1)
        if (a > 0 or b > 0)
    ]
    heights: dict[tuple[int, int], Real] = {}
    for a, b in pairs:
        h = _height_key(norm, a, b)
        limit = height_max * height_max if norm.id == "l2" else height_max
        if compare(h, rational(limit), budget) is not Ordering.GREATER:
            heights[(a, b)] = h

    def by_height(u: tuple[int, int], v: tuple[int, int]) -> int:
        order = compare(heights[u], heights[v], budget)
        if order is Ordering.UNDECIDABLE:
            raise UndecidableError(f"heights of {u} and {v} not separable")
        if order is Ordering.EQUAL:
            return (u > v) - (u < v)
        return -1 if order is Ordering.LESS else 1

    if norm.id in ("sup", "l1", "l2"):
        order_list = sorted(heights, key=lambda ab: (heights[ab].rational_part, ab))  # type: ignore[union-attr]
    else:
        order_list = sorted(heights, key=cmp_to_key(by_height))
    br = _bracket(x, 2 * reach + 2)
    lines: list[AffineLine] = []
    best: Real | None = None
    best_iv: tuple[int, int] | None = None
    idx = 0
    while idx < len(order_list):
        # one group of equal heights
        group = [order_list[idx]]
        idx += 1
        while idx < len(order_list) and compare(heights[order_list[idx]], heights[group[0]], budget) is Ordering.EQUAL:
            group.append(order_list[idx])
            idx += 1
        group_best: tuple[int, int, int] | None = None
        group_val: Real | None = None
        group_iv: tuple[int, int] | None = None
        for a, b in group:
            t = a * br.lo[0] + b * (br.lo[1] if b >= 0 else br.hi[1])
            u = a * br.hi[0] + b * (br.hi[1] if b >= 0 else br.lo[1])
            c_lo, c_hi = -_round_half_up(t, br.scale), -_round_half_up(u, br.scale)
            if c_lo != c_hi:
                c_lo = _exact_c(x, a, b, budget)
            c = c_lo
            if math.gcd(math.gcd(a, b), c) != 1:
                continue
            d_iv = _abs_iv(t + c * br.scale, u + c * br.scale)
            if best_iv is not None and d_iv[0] >= best_iv[1]:
                continue
            if group_iv is not None and d_iv[0] > group_iv[1]:
                continue
            val = absolute(x[0] * a + x[1] * b + c)
            if group_val is None:
                group_best, group_val, group_iv = (a, b, c), val, d_iv
                continue
            order = compare(val, group_val, budget)
            if order is Ordering.UNDECIDABLE:
                raise UndecidableError(f"line distances at equal height not separable near {(a, b, c)}")
            if order is Ordering.LESS or (order is Ordering.EQUAL and (a, b, c) < group_best):  # type: ignore[operator]
                group_best, group_val, group_iv = (a, b, c), val, d_iv
        if group_val is None or group_best is None:
            continue
        if best is not None:
            if best_iv is not None and group_iv is not None and group_iv[0] >= best_iv[1]:
                continue
            order = compare(group_val, best, budget)
            if order is Ordering.UNDECIDABLE:
                raise UndecidableError(f"line {group_best} not separable from the running minimum")
            if order is not Ordering.LESS:
                continue
        a, b, c = group_best
        best, best_iv = group_val, group_iv
        lines.append(AffineLine(a, b, c, norm_eval(norm, (a, b)), group_val))
        if isinstance(group_val, ExactReal) and group_val.is_zero():
            return NearestLines(lines, height_max, uniquely_rational=True)
    return NearestLines(lines, height_max)


def _exact_c(x: Pair, a: int, b: int, budget: int) -> int:
    # c minimizing |a x1 + b x2 + c|; on exact half ties the smaller c wins
    return -floor_real(x[0] * a + x[1] * b + Fraction(1, 2), budget)


# ---------------------------------------------------------------------------
# Perez-Marco analyzer


@dataclass(frozen=True)
class IteratedExp:
    """The integer ceil(exp(exp(base))), kept symbolic."""

    base: "int | IteratedExp"

    def __str__(self) -> str:
        return f"ceil(exp(exp({self.base})))"


PMValue = int | IteratedExp

_E_SQUARED_FLOOR = 7  # floor(e^2)


def _strictly_greater(a: PMValue, b: PMValue) -> bool:
    if isinstance(a, IteratedExp):
        return not isinstance(b, IteratedExp) or _strictly_greater(a.base, b.base)
    if isinstance(b, IteratedExp):
        return False
    return a > b


def _term_interval(q: PMValue, q_next: PMValue, prec: int) -> RatInterval:
    """Enclosure of log(log(q_next)) / q."""
    if isinstance(q_next, IteratedExp):
        if q_next.base != q:
            raise ValueError("symbolic terms must build on the preceding element")
        # log ceil(e^y) lies in [y, y + e^-y], so log log q_next is in
        # [q, q + e^-y / y] with y = e^q >= e^2
        return RatInterval(Fraction(1), Fraction(1) + Fraction(1, 1 << prec))
    if isinstance(q, IteratedExp):
        raise ValueError("an explicit integer cannot follow a symbolic one")
    loglog = interval_log(interval_log(RatInterval.point(q_next), prec + 16), prec + 8)
    return (loglog * Fraction(1, q)).rounded(prec)


@dataclass
class PMReport:
    qs: list[str]
    terms: list[RatInterval]
    partial_sums: list[RatInterval]
    clamped: list[int]
    small_q: list[int]
    classification_hint: str
    rule: str
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "qs": self.qs,
            "terms": [float(t.mid) for t in self.terms],
            "terms_enclosure": [[str(t.lo), str(t.hi)] for t in self.terms],
            "partial_sums": [float(s.mid) for s in self.partial_sums],
            "clamped_indices": self.clamped,
            "small_q_indices": self.small_q,
            "classification_hint": self.classification_hint,
            "rule": self.rule,
            "diagnostics": self.diagnostics,
        }


def pm_analyze(
    qs: Sequence[PMValue],
    eps_tail: float = 1e-3,
    term_floor: float = 1e-2,
    window: int = 10,
    precision: int = 64,
) -> PMReport:
    """Terms log log q_{k+1} / q_k with partial sums and a stated heuristic.

    Terms whose log log is non-positive (q_{k+1} <= e) are clamped to 0;
    terms with q_{k+1} <= e^2 are computed but flagged.  The hint uses the
    last ``window`` terms: looks-convergent when a geometric fit of those
    terms predicts a remaining tail below ``eps_tail``; looks-divergent when
    every one of them is at least ``term_floor`` and the fit does not predict
    a tail smaller than the window sum (short decaying runs stay inconclusive).
    """
    qs = list(qs)
    if len(qs) < 2:
        raise ValueError("need at least two denominators")
    if isinstance(qs[0], int) and qs[0] < 2:
        raise ValueError("q_1 must be at least 2")
    for a, b in zip(qs, qs[1:]):
        if not _strictly_greater(b, a):
            raise ValueError("denominators must be strictly increasing")
    terms: list[RatInterval] = []
    clamped: list[int] = []
    small: list[int] = []
    for k, (q, q_next) in enumerate(zip(qs, qs[1:]), start=1):
        if isinstance(q_next, int) and q_next <= 2:
            terms.append(RatInterval.point(0))
            clamped.append(k)
            continue
        if isinstance(q_next, int) and q_next <= _E_SQUARED_FLOOR:
            small.append(k)
        terms.append(_term_interval(q, q_next, precision))
    sums: list[RatInterval] = []
    running = RatInterval.point(0)
    for t in terms:
        running = running + t
        sums.append(running)
    hint, rule, diag = _classify([float(t.mid) for t in terms], eps_tail, term_floor, window)
    return PMReport([str(q) for q in qs], terms, sums, clamped, small, hint, rule, diag)


def _classify(terms: list[float], eps_tail: float, term_floor: float, window: int) -> tuple[str, str, dict]:
    tail = terms[-window:]
    rule = (
        f"window=last {len(tail)} terms; looks-convergent if geometric-fit remaining tail < {eps_tail}; "
        f"looks-divergent if every window term >= {term_floor} and the fitted tail is at least the window sum; "
        "otherwise inconclusive"
    )
    positive = [(i, t) for i, t in enumerate(tail) if t > 0]
    diag: dict = {"window": len(tail), "window_sum": sum(tail)}
    remainder = math.inf
    if len(positive) >= 2:
        xs = [i for i, _ in positive]
        ys = [math.log(t) for _, t in positive]
        mean_x, mean_y = sum(xs) / len(xs), sum(ys) / len(ys)
        var = sum((a - mean_x) ** 2 for a in xs)
        slope = sum((a - mean_x) * (b - mean_y) for a, b in zip(xs, ys)) / var
        ratio = math.exp(slope)
        diag["fitted_ratio"] = ratio
        if ratio < 1:
            remainder = tail[-1] * ratio / (1 - ratio)
    diag["estimated_remainder"] = remainder if math.isfinite(remainder) else None
    if remainder < eps_tail:
        return "looks-convergent", rule, diag
    if tail and min(tail) >= term_floor and remainder >= diag["window_sum"]:
        return "looks-divergent", rule, diag
    return "inconclusive", rule, diag


def iterated_exp_sequence(start: int, count: int) -> list[PMValue]:
    """start, ceil(e^(e^start)), ... with ``count`` elements in total."""
    seq: list[PMValue] = [start]
    while len(seq) < count:
        seq.append(IteratedExp(seq[-1]))
    return seq


def ell_n(qs: Sequence[int], n: Fraction | int) -> list[int]:
    """1-based k with q_{k+1} > q_k^N, decided by integer powers."""
    n = Fraction(n)
    if n <= 0:
        raise ValueError("N must be positive")
    for a, b in zip(qs, qs[1:]):
        if b <= a:
            raise ValueError("denominators must be strictly increasing")
    return [k for k, (a, b) in enumerate(zip(qs, qs[1:]), start=1) if b**n.denominator > a**n.numerator]


def pm_compare_norms(
    x: Pair, norms: Sequence[Norm], q_max: int, budget: int = DEFAULT_BUDGET, **pm_options
) -> dict:
    """Per-norm denominators, PM reports and how the sequences interleave."""
    if len(norms) < 2:
        raise ValueError("need at least two norms")
    per_norm: dict[str, dict] = {}
    seqs: dict[str, list[int]] = {}
    for n in norms:
        qs = denominators(best_approx_sequence(x, n, q_max, budget))
        seqs[n.label()] = qs
        usable = [q for q in qs if q >= 2]
        report = pm_analyze(usable, **pm_options) if len(usable) >= 2 else None
        per_norm[n.label()] = {
            "denominators": qs,
            "pm": report.to_json() if report else None,
            "hint": report.classification_hint if report else "inconclusive",
        }
    labels = list(seqs)
    interleave = {}
    for i, a in enumerate(labels):
        for b in labels[i + 1 :]:
            interleave[f"{a}~{b}"] = _interleaving(seqs[a], seqs[b])
    hints = {per_norm[l]["hint"] for l in labels}
    contradictory = "looks-convergent" in hints and "looks-divergent" in hints
    first = seqs[labels[0]]
    return {
        "q_max": q_max,
        "per_norm": per_norm,
        "interleaving": interleave,
        "identical_sequences": all(seqs[l] == first for l in labels),
        "contradictory": contradictory,
    }


def _interleaving(a: list[int], b: list[int]) -> dict:
    import bisect

    offsets = []
    for i, q in enumerate(a):
        j = bisect.bisect_right(b, q) - 1
        offsets.append(j - i)
    shared = sorted(set(a) & set(b))
    return {
        "offsets": offsets,
        "max_abs_offset": max((abs(o) for o in offsets), default=0),
        "shared": len(shared),
        "shared_fraction": len(shared) / max(1, len(set(a) | set(b))),
    }
