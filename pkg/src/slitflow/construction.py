"""Slit production procedures and the predicates that drive them.

Two ways of growing a slit w into children w + 2v are implemented: the
Diophantine one, where v ranges over loops of prescribed height whose cross
product with w is small, and the Liouville one, where v runs along an
arithmetic progression built from a Liouville convergent.  Around them sit
the good/normal/miracle predicates, the parameter derivation, the height
interval bookkeeping that decides which construction runs at which level,
and the strips/clusters counting audit.

Children with large heights are found by enumerating lattice points in a thin
strip rather than by scanning heights one at a time (see
:func:`_strip_points`); every candidate is then certified exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .bestapprox import BestApprox, NearestLines, ell_n
from .contfrac import Convergent, next_quotient_floor, quotient_stream
from .errors import (
    InsufficientLines,
    NotFoundAtCap,
    PreconditionViolation,
    ScheduleInfeasible,
    UndecidableError,
)
from .numerics import (
    DEFAULT_BUDGET,
    SUP,
    BudgetExceeded,
    Norm,
    Ordering,
    Real,
    Verdict,
    absolute,
    as_real,
    ceil_real,
    compare,
    enclose,
    floor_real,
    fraction_to_str,
    norm_eval,
    rational,
    real_log,
    real_pow,
    round_real,
    to_float,
)
from .surface import Context, Loop, Slit, cross, liouville_convergent, signed_cross, tilde_constant

Number = int | Fraction

# 4/(27 pi) rounded down through pi < 355/113
C0 = Fraction(452, 9585)

MODES = ("full-schedule", "toy", "finite-ellN")


# ---------------------------------------------------------------------------
# parameters


def _cube_root_floor(x: Fraction, digits: int = 12) -> Fraction:
    """Largest multiple of 10**-digits whose cube is below x."""
    scale = 10**digits
    target = x * scale**3
    lo, hi = 0, scale * 2
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if mid**3 < target:
            lo = mid
        else:
            hi = mid - 1
    return Fraction(lo, scale)


def _delta_sup(r: Fraction, epsilon: Fraction) -> Fraction:
    # (1 - d)/(1 + r + 2d) > h  <=>  d < (1 - h(1 + r))/(1 + 2h)
    h = Fraction(1, 2) - epsilon
    return (1 - h * (1 + r)) / (1 + 2 * h)


@dataclass(frozen=True)
class ConstructionParams:
    r: Fraction
    delta: Fraction
    M: Fraction
    M_prime: Fraction
    N: Fraction
    N_prime: Fraction
    rho: Fraction
    epsilon: Fraction | None = None
    c0: Fraction = C0
    c: Fraction = Fraction(5)
    k0: int | None = None
    mode: str = "full-schedule"
    schedule_depth: int | None = None
    warnings: tuple[str, ...] = ()

    @property
    def depth(self) -> int:
        """Exponent n used in the level schedules (rho^n factors)."""
        if self.schedule_depth is not None:
            return self.schedule_depth
        return math.ceil(self.N_prime)

    def consistency(self) -> list[str]:
        """Identities between stored and recomputed quantities that fail."""
        out = []
        r = self.r
        if self.M * (r - 1) != 1:
            out.append("M (r - 1) != 1")
        if self.M_prime != max(3 * self.M**2, self.M * r / self.delta):
            out.append("M' != max(3 M^2, M r / delta)")
        if self.N != 4 * self.M_prime * r**5:
            out.append("N != 4 M' r^5")
        if self.N_prime != 4 * (self.N + 1) * r / (r - 1):
            out.append("N' != 4 (N + 1) r / (r - 1)")
        if self.rho != r + Fraction(1, 2):
            out.append("rho != r + 1/2")
        return out

    def hypothesis_failures(self) -> list[str]:
        out = []
        r = self.r
        if not (r > 1 and r**3 < Fraction(3, 2)):
            out.append("1 < r < r^3 < 3/2 fails")
        if self.epsilon is not None:
            h = Fraction(1, 2) - self.epsilon
            if not Fraction(1) / (1 + r) > h:
                out.append("1/(1 + r) > 1/2 - epsilon fails")
            if not (1 - self.delta) / (1 + r + 2 * self.delta) > h:
                out.append("(1 - delta)/(1 + r + 2 delta) > 1/2 - epsilon fails")
        return out

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "epsilon": None if self.epsilon is None else fraction_to_str(self.epsilon),
            "r": fraction_to_str(self.r),
            "delta": fraction_to_str(self.delta),
            "M": fraction_to_str(self.M),
            "M_prime": fraction_to_str(self.M_prime),
            "N": fraction_to_str(self.N),
            "N_prime": fraction_to_str(self.N_prime),
            "rho": fraction_to_str(self.rho),
            "c0": fraction_to_str(self.c0),
            "c": fraction_to_str(self.c),
            "k0": self.k0,
            "schedule_depth": self.schedule_depth,
            "floats": {"r": float(self.r), "M": float(self.M), "N": float(self.N), "N_prime": float(self.N_prime)},
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_json(cls, data: dict) -> "ConstructionParams":
        eps = data.get("epsilon")
        return params_from_r(
            Fraction(data["r"]),
            delta=Fraction(data["delta"]),
            epsilon=None if eps is None else Fraction(eps),
            mode=data.get("mode", "full-schedule"),
            c=Fraction(data.get("c", 5)),
            k0=data.get("k0"),
            schedule_depth=data.get("schedule_depth"),
        )


def norm_constant_c(norm: Norm) -> Fraction:
    """c = 5 C'^5 with C' the norm's equivalence constant against sup."""
    return 5 * Fraction(norm.equiv_upper) ** 5


def params_from_r(
    r: Number,
    delta: Number | None = None,
    epsilon: Number | None = None,
    mode: str = "toy",
    c: Number | None = None,
    norm: Norm = SUP,
    k0: int | None = None,
    schedule_depth: int | None = None,
) -> ConstructionParams:
    """Derive M, M', N, N', rho from r and delta.

    Outside toy mode every hypothesis on (epsilon, r, delta) must hold; in toy
    mode violations are kept as warnings.
    """
    if mode == "full":
        mode = "full-schedule"
    if mode not in MODES:
        raise PreconditionViolation(f"unknown mode {mode!r}")
    r = Fraction(r)
    if r <= 1:
        raise PreconditionViolation("r must exceed 1")
    eps = None if epsilon is None else Fraction(epsilon)
    if delta is None:
        delta = _delta_sup(r, eps) / 2 if eps is not None else Fraction(1, 10)
    delta = Fraction(delta)
    if delta <= 0:
        raise PreconditionViolation("delta must be positive")
    big_m = 1 / (r - 1)
    m_prime = max(3 * big_m**2, big_m * r / delta)
    n = 4 * m_prime * r**5
    params = ConstructionParams(
        r=r,
        delta=delta,
        M=big_m,
        M_prime=m_prime,
        N=n,
        N_prime=4 * (n + 1) * r / (r - 1),
        rho=r + Fraction(1, 2),
        epsilon=eps,
        c=Fraction(c) if c is not None else norm_constant_c(norm),
        k0=k0,
        mode=mode,
        schedule_depth=schedule_depth,
    )
    problems = params.hypothesis_failures()
    if problems and mode != "toy":
        raise PreconditionViolation("; ".join(problems))
    return ConstructionParams(**{**params.__dict__, "warnings": tuple(problems)})


def derive_params(epsilon: Number, r_choice: Number | None = None, norm: Norm = SUP) -> ConstructionParams:
    """Full-schedule parameters for a target dimension gap epsilon."""
    eps = Fraction(epsilon)
    if not (0 < eps < Fraction(1, 2)):
        raise PreconditionViolation("epsilon must lie in (0, 1/2)")
    cube = _cube_root_floor(Fraction(3, 2))
    upper = min(cube, 1 / (Fraction(1, 2) - eps) - 1)
    if upper <= 1:
        raise ScheduleInfeasible(f"no admissible r for epsilon = {eps}")
    notes: list[str] = []
    r = (1 + upper) / 2
    if r_choice is not None:
        candidate = Fraction(r_choice)
        ok = candidate > 1 and candidate**3 < Fraction(3, 2) and 1 / (1 + candidate) > Fraction(1, 2) - eps
        if ok:
            r = candidate
        else:
            notes.append(f"r = {candidate} is not admissible; using the midpoint {r}")
    params = params_from_r(r, epsilon=eps, mode="full-schedule", norm=norm)
    return ConstructionParams(**{**params.__dict__, "warnings": tuple(notes)})


# ---------------------------------------------------------------------------
# spectrum


@dataclass
class Spectrum:
    """Strictly increasing convergent heights of a slit's inverse slope."""

    convergents: list[Convergent]
    exhausted: bool = False
    undecided: bool = False
    next_lower: int | None = None

    @property
    def heights(self) -> list[int]:
        return [c.q for c in self.convergents]

    def to_json(self) -> dict:
        return {
            "heights": self.heights,
            "exhausted": self.exhausted,
            "undecided": self.undecided,
            "next_height_lower_bound": self.next_lower,
        }


def spectrum_of_slope(
    theta: Real,
    depth: int | None = None,
    height_max: Real | Number | None = None,
    budget: int = DEFAULT_BUDGET,
) -> Spectrum:
    """Convergents until ``depth`` heights are known or one exceeds ``height_max``.

    The first height beyond ``height_max`` is included.  Equal consecutive
    heights (q0 = q1 = 1) keep the later convergent.
    """
    if depth is None and height_max is None:
        raise ValueError("give depth or height_max")
    limit = None if height_max is None else as_real(height_max)
    out: list[Convergent] = []
    quotients: list[int] = []
    p_prev, q_prev, p, q = 0, 1, 1, 0
    stream = quotient_stream(theta, budget)
    while True:
        try:
            a = next(stream)
        except StopIteration:
            return Spectrum(out, exhausted=True)
        except UndecidableError:
            # the next height may still be certifiably beyond the limit
            floor_a = next_quotient_floor(theta, quotients, budget)
            if limit is not None and floor_a is not None and floor_a >= 1:
                bound = floor_a * q + q_prev
                if compare(rational(bound), limit, budget) is Ordering.GREATER:
                    return Spectrum(out, next_lower=bound)
            return Spectrum(out, undecided=True)
        quotients.append(a)
        p_prev, q_prev, p, q = p, q, a * p + p_prev, a * q + q_prev
        conv = Convergent(p, q)
        if out and out[-1].q == q:
            out[-1] = conv
        else:
            out.append(conv)
        if depth is not None and len(out) >= depth:
            return Spectrum(out)
        if limit is not None:
            order = compare(rational(q), limit, budget)
            if order is Ordering.GREATER:
                return Spectrum(out)
            if order is Ordering.UNDECIDABLE:
                return Spectrum(out, undecided=True)


def spectrum(
    w: Slit, depth: int | None = None, height_max: Real | Number | None = None, budget: int = DEFAULT_BUDGET
) -> Spectrum:
    return spectrum_of_slope(w.inverse_slope(), depth, height_max, budget)


# ---------------------------------------------------------------------------
# goodness


def _good(w: Slit, lo_factor: Real | Number, hi_factor: Real | Number, budget: int) -> Verdict:
    h = w.height
    lo = as_real(lo_factor) * h
    hi = as_real(hi_factor) * h
    spec = spectrum(w, height_max=hi, budget=budget)
    unsure = spec.undecided
    for q in spec.heights:
        c1 = compare(rational(q), lo, budget)
        c2 = compare(rational(q), hi, budget)
        if Ordering.UNDECIDABLE in (c1, c2):
            unsure = True
            continue
        if c1 is not Ordering.LESS and c2 is not Ordering.GREATER:
            return Verdict.TRUE
    return Verdict.UNDECIDABLE if unsure else Verdict.FALSE


def is_good(w: Slit, alpha: Real | Number, beta: Real | Number, budget: int = DEFAULT_BUDGET) -> Verdict:
    """Some convergent height q of the inverse slope has alpha|w| <= q <= beta|w|."""
    alpha, beta = as_real(alpha), as_real(beta)
    if compare(alpha, rational(1), budget) is Ordering.LESS:
        raise PreconditionViolation("(alpha, beta)-good needs alpha >= 1")
    if compare(alpha, beta, budget) is not Ordering.LESS:
        raise PreconditionViolation("(alpha, beta)-good needs alpha < beta")
    return _good(w, alpha, beta, budget)


# ---------------------------------------------------------------------------
# normality


@dataclass
class NormalResult:
    verdict: Verdict
    vacuous: bool = False
    horizon: float | None = None
    cover: list[dict] = field(default_factory=list)
    gap_at: float | None = None
    reason: str = ""

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "vacuous": self.vacuous,
            "T": self.horizon,
            "cover": self.cover,
            "gap_at": self.gap_at,
            "reason": self.reason,
        }


def normal_from_spectrum(
    heights: Sequence[int],
    height: Real | Number,
    alpha: Real | Number,
    r: Number,
    rho: Number,
    complete: bool = False,
    budget: int = DEFAULT_BUDGET,
    next_lower: int | None = None,
) -> NormalResult:
    """Decide Psi meets [alpha rho^t h, h^(1 + (r-1) t)] for every t in [1, T].

    A height q serves exactly the t in [b_q, a_q] with
    a_q = log_rho(q / (alpha h)) and b_q = log_h(q) - 1 over (r - 1); both
    are increasing in q, so one sweep over the sorted heights decides the
    cover.  ``complete`` says no further heights exist (rational slope);
    ``next_lower`` bounds the first unknown height from below.
    """
    h, alpha = as_real(height), as_real(alpha)
    r, rho = Fraction(r), Fraction(rho)
    if compare(alpha, rational(1), budget) is not Ordering.GREATER:
        raise PreconditionViolation("alpha-normal needs alpha > 1")
    log_h = real_log(h)
    log_rho = real_log(rational(rho))
    log_alpha = real_log(alpha)
    # float shadows settle clear-cut comparisons; near-ties go to exact enclosures
    fh, fr, fa = math.log(to_float(h)), math.log(float(rho)), math.log(to_float(alpha))
    horizon_f = (fh * float(r - 1) - fa) / fr

    def order_of(x: Real, y: Real, xf: float, yf: float) -> Ordering:
        if abs(xf - yf) > 1e-9 * (1 + abs(xf) + abs(yf)):
            return Ordering.LESS if xf < yf else Ordering.GREATER
        return compare(x, y, budget)

    horizon = (log_h * (r - 1) - log_alpha) / log_rho
    order = order_of(horizon, rational(1), horizon_f, 1.0)
    if order is Ordering.UNDECIDABLE:
        return NormalResult(Verdict.UNDECIDABLE, reason="T versus 1 undecidable")
    if order is Ordering.LESS:
        return NormalResult(Verdict.TRUE, vacuous=True, horizon=horizon_f, reason="T < 1")
    cur: Real = rational(1)
    cur_f = 1.0
    started = False
    cover: list[dict] = []
    for q in sorted(set(heights)):
        fq = math.log(q)
        a_f = (fq - fa - fh) / fr
        b_f = (fq - fh) / (fh * float(r - 1))
        log_q = real_log(rational(q))
        a_q = (log_q - log_alpha - log_h) / log_rho
        b_q = (log_q - log_h) / (log_h * (r - 1))
        b_vs = order_of(b_q, cur, b_f, cur_f)
        if b_vs is Ordering.UNDECIDABLE:
            return NormalResult(Verdict.UNDECIDABLE, horizon=horizon_f, cover=cover, reason=f"b_{q} undecidable")
        if b_vs is Ordering.GREATER:
            return NormalResult(Verdict.FALSE, horizon=horizon_f, cover=cover, gap_at=cur_f, reason=f"gap before q = {q}")
        a_vs = order_of(a_q, cur, a_f, cur_f)
        if a_vs is Ordering.UNDECIDABLE:
            return NormalResult(Verdict.UNDECIDABLE, horizon=horizon_f, cover=cover, reason=f"a_{q} undecidable")
        if a_vs is Ordering.LESS:
            continue
        cur, cur_f, started = a_q, a_f, True
        cover.append({"q": q, "from": b_f, "to": a_f})
        done = order_of(cur, horizon, cur_f, horizon_f)
        if done is Ordering.UNDECIDABLE:
            return NormalResult(Verdict.UNDECIDABLE, horizon=horizon_f, cover=cover, reason="a_q versus T")
        if done is not Ordering.LESS:
            return NormalResult(Verdict.TRUE, horizon=horizon_f, cover=cover)
    if complete:
        return NormalResult(
            Verdict.FALSE, horizon=horizon_f, cover=cover, gap_at=cur_f if started else 1.0, reason="spectrum ended"
        )
    if next_lower is not None:
        # b_q grows with q, so a lower bound on the next height can certify a gap
        b_f = (math.log(next_lower) - fh) / (fh * float(r - 1))
        b_lo = (real_log(rational(next_lower)) - log_h) / (log_h * (r - 1))
        if order_of(b_lo, cur, b_f, cur_f) is Ordering.GREATER:
            return NormalResult(
                Verdict.FALSE, horizon=horizon_f, cover=cover, gap_at=cur_f, reason=f"gap before q >= {next_lower}"
            )
    return NormalResult(Verdict.UNDECIDABLE, horizon=horizon_f, cover=cover, reason="spectrum too short")


def is_normal(
    w: Slit, alpha: Real | Number, params: ConstructionParams, budget: int = DEFAULT_BUDGET
) -> NormalResult:
    """alpha-normality of w under the params' r and rho."""
    h = w.height
    # heights beyond the first q >= |w|^r never extend the cover
    spec = spectrum(w, height_max=real_pow(h, params.r), budget=budget)
    result = normal_from_spectrum(
        spec.heights, h, alpha, params.r, params.rho, complete=spec.exhausted, budget=budget, next_lower=spec.next_lower
    )
    if result.verdict is Verdict.UNDECIDABLE and spec.undecided:
        result.reason = "spectrum undecidable at budget"
    return result


# ---------------------------------------------------------------------------
# lattice points in a thin strip


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def _gauss_reduce(b1: list[int], b2: list[int], wz: int, wq: int) -> tuple[list[int], list[int]]:
    """Lagrange reduction of two vectors (z, q, cp, cq) under (z wz)^2 + (q wq)^2."""

    def nrm(v: list[int]) -> int:
        return (v[0] * wz) ** 2 + (v[1] * wq) ** 2

    def dot(u: list[int], v: list[int]) -> int:
        return u[0] * v[0] * wz * wz + u[1] * v[1] * wq * wq

    if nrm(b1) > nrm(b2):
        b1, b2 = b2, b1
    while True:
        n1 = nrm(b1)
        mu = (2 * dot(b1, b2) + n1) // (2 * n1)
        b2 = [x - mu * y for x, y in zip(b2, b1)]
        if nrm(b2) >= n1:
            return b1, b2
        b1, b2 = b2, b1


def _i_range(coef: int, offset: int, lo: int, hi: int) -> tuple[int, int] | None:
    """Integers i with lo <= i*coef + offset <= hi (None means unconstrained)."""
    if coef == 0:
        return None if lo <= offset <= hi else (1, 0)
    if coef > 0:
        return _ceil_div(lo - offset, coef), (hi - offset) // coef
    return _ceil_div(hi - offset, coef), (lo - offset) // coef


def _box_points(b1: list[int], b2: list[int], z_bound: int, q_lo: int, q_hi: int) -> list[tuple[int, int]]:
    """Coefficient pairs (p, q) of lattice points with |z| <= z_bound, q_lo <= q <= q_hi."""
    det = b1[0] * b2[1] - b2[0] * b1[1]
    if det < 0:
        b1, b2, det = b2, b1, -det
    corners = [(z, q) for z in (-z_bound, z_bound) for q in (q_lo, q_hi)]
    nums = [b1[0] * q - b1[1] * z for z, q in corners]
    out = []
    for j in range(_ceil_div(min(nums), det), max(nums) // det + 1):
        lo, hi = -(10**400), 10**400
        for coef, off, a, b in ((b1[0], j * b2[0], -z_bound, z_bound), (b1[1], j * b2[1], q_lo, q_hi)):
            rng = _i_range(coef, off, a, b)
            if rng is not None:
                lo, hi = max(lo, rng[0]), min(hi, rng[1])
        for i in range(lo, hi + 1):
            out.append((i * b1[2] + j * b2[2], i * b1[3] + j * b2[3]))
    return out


class _CrossOracle:
    """Scaled-integer enclosures of w x v for one slit w.

    x and y are bracketed as [lo, hi] / 2**bits; comparisons that the brackets
    cannot settle fall back to exact Real arithmetic.
    """

    def __init__(self, w: Slit, bits: int, budget: int) -> None:
        self.w, self.bits, self.budget = w, bits, budget
        scale = 1 << bits
        xi = enclose(w.x, bits + 2, None)
        yi = enclose(w.y, bits + 2, None)
        self.xl, self.xh = math.floor(xi.lo * scale), math.ceil(xi.hi * scale)
        self.yl, self.yh = math.floor(yi.lo * scale), math.ceil(yi.hi * scale)

    def abs_interval(self, p: int, q: int) -> tuple[int, int]:
        # q > 0 always; the sign of p picks the y end
        lo = q * self.xl - (p * self.yh if p >= 0 else p * self.yl)
        hi = q * self.xh - (p * self.yl if p >= 0 else p * self.yh)
        if lo >= 0:
            return lo, hi
        if hi <= 0:
            return -hi, -lo
        return 0, max(-lo, hi)

    def _bound_interval(self, bound: Real) -> tuple[int, int]:
        iv = enclose(bound, self.bits + 2, None)
        scale = 1 << self.bits
        return math.floor(iv.lo * scale), math.ceil(iv.hi * scale)

    def compare_bound(self, p: int, q: int, bound: Real, bound_iv: tuple[int, int] | None = None) -> Ordering:
        """Certified ordering of |w x (p, q)| against ``bound``."""
        lo, hi = self.abs_interval(p, q)
        blo, bhi = bound_iv if bound_iv is not None else self._bound_interval(bound)
        if hi < blo:
            return Ordering.LESS
        if lo > bhi:
            return Ordering.GREATER
        return compare(cross(self.w, (p, q)), bound, self.budget)


def _strip_points(
    w: Slit, q_lo: int, q_hi: int, bound: Fraction, budget: int, chunk_points: int = 512
) -> Iterator[tuple[int, int]]:
    """Superset of integer (p, q), q_lo <= q <= q_hi, with |x q - y p| < bound.

    Sorted by q then p.  Works on the lattice {(qX - pY, q)} where X, Y are
    2**bits-scaled approximations of the slit coordinates; a Gauss-reduced
    basis of that lattice reduces the thin strip to a handful of lines.
    """
    q_lo = max(q_lo, 1)
    if q_hi < q_lo:
        return
    xf, yf = abs(to_float(w.x)), abs(to_float(w.y))
    p_max = int(xf / yf * q_hi) + 2
    reach = q_hi + p_max + 2
    bits = max(64, (reach * bound.denominator // max(bound.numerator, 1)).bit_length() + 24)
    scale = 1 << bits
    xi = enclose(w.x, bits + 2, None)
    yi = enclose(w.y, bits + 2, None)
    big_x = math.floor(xi.lo * scale)
    big_y = math.floor(yi.lo * scale)
    z_bound = math.ceil(bound * scale) + 2 * reach
    density = Fraction(2 * z_bound, abs(big_y))
    span = max(1, int(chunk_points / density)) if density > 0 else q_hi - q_lo + 1
    b1, b2 = _gauss_reduce([-big_y, 0, 1, 0], [big_x, 1, 0, 1], max(span, 1), max(z_bound, 1))
    start = q_lo
    while start <= q_hi:
        stop = min(q_hi, start + span - 1)
        pts = _box_points(b1, b2, z_bound, start, stop)
        pts.sort(key=lambda pq: (pq[1], pq[0]))
        yield from pts
        start = stop + 1


def _height_range(low: Real, high: Real, budget: int) -> tuple[int, int]:
    return max(1, ceil_real(low, budget)), floor_real(high, budget)


@dataclass
class ChildList:
    """Children w + 2v with their loops v, in order of increasing |v|."""

    parent: Slit
    children: list[tuple[Slit, Loop]]
    truncated: bool
    q_range: tuple[int, int]

    def __len__(self) -> int:
        return len(self.children)

    def __iter__(self):
        return iter(self.children)

    def to_json(self) -> dict:
        return {
            "parent": self.parent.to_json(),
            "count": len(self.children),
            "truncated": self.truncated,
            "q_range": list(self.q_range),
            "children": [{"slit": s.to_json(), "v": v.to_json()} for s, v in self.children],
        }


def iter_cross_children(
    w: Slit,
    q_low: Real,
    q_high: Real,
    upper: Fraction,
    lower: Real | None = None,
    budget: int = DEFAULT_BUDGET,
) -> Iterator[tuple[Slit, Loop]]:
    """All w + 2v with gcd(v) = 1, q_low <= |v| <= q_high, lower < |w x v| < upper."""
    q_lo, q_hi = _height_range(q_low, q_high, budget)
    if q_hi < q_lo:
        return
    oracle: _CrossOracle | None = None
    upper_r = rational(upper)
    upper_iv = lower_iv = None
    for p, q in _strip_points(w, q_lo, q_hi, upper, budget):
        if math.gcd(p, q) != 1:
            continue
        if oracle is None:
            oracle = _CrossOracle(w, max(64, 2 * q_hi.bit_length() + 64), budget)
            upper_iv = oracle._bound_interval(upper_r)
            if lower is not None:
                lower_iv = oracle._bound_interval(as_real(lower))
        order = oracle.compare_bound(p, q, upper_r, upper_iv)
        if order is Ordering.UNDECIDABLE:
            raise UndecidableError(f"|w x ({p}, {q})| versus {upper} undecidable")
        if order is not Ordering.LESS:
            continue
        if lower is not None:
            order = oracle.compare_bound(p, q, as_real(lower), lower_iv)
            if order is Ordering.UNDECIDABLE:
                raise UndecidableError(f"|w x ({p}, {q})| versus the lower bound undecidable")
            if order is not Ordering.GREATER:
                continue
        v = Loop(p, q)
        yield w.plus(v), v


def _collect(w: Slit, it: Iterator[tuple[Slit, Loop]], cap: int, q_range: tuple[int, int]) -> ChildList:
    out: list[tuple[Slit, Loop]] = []
    for item in it:
        if len(out) >= cap:
            return ChildList(w, out, True, q_range)
        out.append(item)
    return ChildList(w, out, False, q_range)


def enumerate_delta(
    w: Slit, alpha: Number, beta: Real | Number, cap: int = 10**5, budget: int = DEFAULT_BUDGET
) -> ChildList:
    """Delta(w, alpha, beta): beta|w| <= |v| <= 2 beta|w| and 1/beta < |w x v| < 1/alpha."""
    alpha = Fraction(alpha)
    beta_r = as_real(beta)
    if not (alpha > 1 and compare(rational(alpha), beta_r, budget) is Ordering.LESS):
        raise PreconditionViolation("Delta needs 1 < alpha < beta")
    low, high = beta_r * w.height, beta_r * w.height * 2
    q_range = _height_range(low, high, budget)
    it = iter_cross_children(w, low, high, 1 / alpha, 1 / beta_r, budget)
    return _collect(w, it, cap, q_range)


def iter_diophantine_children(
    w: Slit, alpha: Number, r: Number, budget: int = DEFAULT_BUDGET
) -> Iterator[tuple[Slit, Loop]]:
    """Candidates w + 2v with |w|^r <= |v| <= 2|w|^r and |w x v| < 1/alpha."""
    top = real_pow(w.height, Fraction(r))
    return iter_cross_children(w, top, top * 2, 1 / Fraction(alpha), None, budget)


def enumerate_children(
    w: Slit, alpha: Number, r: Number, cap: int = 10**5, budget: int = DEFAULT_BUDGET
) -> ChildList:
    top = real_pow(w.height, Fraction(r))
    q_range = _height_range(top, top * 2, budget)
    return _collect(w, iter_diophantine_children(w, alpha, r, budget), cap, q_range)


def in_delta(w: Slit, child: Slit, alpha: Number, beta: Real | Number, budget: int = DEFAULT_BUDGET) -> Verdict:
    """Membership of child in Delta(w, alpha, beta), decided from scratch."""
    dm, dn = child.m - w.m, child.n - w.n
    if dm % 2 or dn % 2:
        return Verdict.FALSE
    p, q = dm // 2, dn // 2
    if q <= 0 or math.gcd(p, q) != 1:
        return Verdict.FALSE
    beta_r = as_real(beta)
    h = w.height
    value = cross(w, (p, q))
    checks = [
        compare(beta_r * h, rational(q), budget),
        compare(rational(q), beta_r * h * 2, budget),
        compare(1 / beta_r, value, budget),
        compare(value, rational(1 / Fraction(alpha)), budget),
    ]
    if Ordering.UNDECIDABLE in checks:
        return Verdict.UNDECIDABLE
    ok = checks[0] is not Ordering.GREATER and checks[1] is not Ordering.GREATER
    ok = ok and checks[2] is Ordering.LESS and checks[3] is Ordering.LESS
    return Verdict.of(ok)


def check_good_children(
    w: Slit,
    alpha: Number,
    beta: Real | Number,
    children: Sequence[Slit] | ChildList,
    budget: int = DEFAULT_BUDGET,
) -> dict:
    """Each Delta child must be (alpha - 1/2, beta)-good and not (1, alpha - 1/2)-good."""
    alpha = Fraction(alpha)
    slits = [c[0] if isinstance(c, tuple) else c for c in children]
    half = alpha - Fraction(1, 2)
    records = []
    for child in slits:
        member = in_delta(w, child, alpha, beta, budget)
        upper_good = _good(child, half, beta, budget)
        if half > 1:
            lower_good = _good(child, 1, half, budget)
        else:
            lower_good = Verdict.FALSE  # the interval [|w'|, (alpha - 1/2)|w'|] holds no height above |w'|
        passed = member is Verdict.TRUE and upper_good is Verdict.TRUE and lower_good is Verdict.FALSE
        records.append(
            {
                "m": child.m,
                "n": child.n,
                "member": member.value,
                "good_upper": upper_good.value,
                "good_lower": lower_good.value,
                "passed": passed,
            }
        )
    failures = [r for r in records if not r["passed"]]
    return {
        "alpha": fraction_to_str(alpha),
        "checked": len(records),
        "vacuous": not records,
        "passed": not failures,
        "failures": failures,
    }


def good_count_bound(alpha: Number, beta: Real | Number) -> Real:
    """c0 beta / alpha, the guaranteed size of Delta for good slits."""
    return as_real(beta) * (C0 / Fraction(alpha))


# ---------------------------------------------------------------------------
# miracle slits


@dataclass
class MiracleResult:
    verdict: Verdict
    status: str
    line: tuple[int, int, int] | None = None
    eta: tuple[int, int, int] | None = None
    eta_next_height: float | None = None

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "status": self.status,
            "line": None if self.line is None else list(self.line),
            "eta": None if self.eta is None else list(self.eta),
            "eta_next_height": self.eta_next_height,
        }


def associated_line(w: Slit, r: Number, budget: int = DEFAULT_BUDGET) -> tuple[tuple[int, int, int], Convergent] | None:
    """l = (q, -p, q m - p n) from the convergent with |w| < q <= |w|^r < q'."""
    h = w.height
    top = real_pow(h, Fraction(r))
    spec = spectrum(w, height_max=top, budget=budget)
    chosen = None
    for conv in spec.convergents:
        above = compare(rational(conv.q), h, budget)
        below = compare(rational(conv.q), top, budget)
        if Ordering.UNDECIDABLE in (above, below):
            raise UndecidableError("convergent height against |w| or |w|^r undecidable")
        if above is Ordering.GREATER and below is not Ordering.GREATER:
            chosen = conv
    if chosen is None:
        return None
    if spec.convergents[-1] == chosen:
        if spec.undecided:
            raise UndecidableError("next convergent after the associated one undecidable")
        if not spec.exhausted and spec.next_lower is None:
            raise UndecidableError("spectrum stopped before passing |w|^r")
    p, q = chosen.p, chosen.q
    return (q, -p, q * w.m - p * w.n), chosen


def is_miracle(
    w: Slit, r: Number, lines: NearestLines, norm: Norm = SUP, budget: int = DEFAULT_BUDGET
) -> MiracleResult:
    """l = +-eta_j (eta_j^- <= l^- < eta_{j+1}^-) and eta_{j+1}^- > (eta_j^-)^(r^3)."""
    if lines.uniquely_rational:
        return MiracleResult(Verdict.FALSE, "not-applicable")
    found = associated_line(w, r, budget)
    if found is None:
        return MiracleResult(Verdict.FALSE, "no-associated-line")
    ell, _ = found
    ell_height = norm_eval(norm, (ell[0], ell[1]))
    r3 = Fraction(r) ** 3
    j = None
    for idx, line in enumerate(lines.lines):
        order = compare(line.height, ell_height, budget)
        if order is Ordering.UNDECIDABLE:
            raise UndecidableError("line height against l^- undecidable")
        if order is not Ordering.GREATER:
            j = idx
    if j is None:
        raise InsufficientLines("no nearest line of height <= l^-")
    eta = lines.lines[j]
    eta_t = (eta.a, eta.b, eta.c)
    same = eta_t == ell or eta_t == tuple(-x for x in ell)
    if j + 1 < len(lines.lines):
        nxt = lines.lines[j + 1]
        if not same:
            return MiracleResult(Verdict.FALSE, "decided", ell, eta_t, to_float(nxt.height))
        far = compare(nxt.height, real_pow(eta.height, r3), budget)
        if far is Ordering.UNDECIDABLE:
            raise UndecidableError("eta_{j+1}^- against (eta_j^-)^(r^3) undecidable")
        return MiracleResult(Verdict.of(far is Ordering.GREATER), "decided", ell, eta_t, to_float(nxt.height))
    if compare(rational(lines.height_max), ell_height, budget) is Ordering.LESS:
        raise InsufficientLines(f"lines reach height {lines.height_max}, below l^- = {to_float(ell_height):.6g}")
    if not same:
        return MiracleResult(Verdict.FALSE, "decided", ell, eta_t)
    # no next line up to height_max: eta_{j+1}^- > height_max
    reach = compare(rational(lines.height_max), real_pow(eta.height, r3), budget)
    if reach in (Ordering.GREATER, Ordering.EQUAL):
        return MiracleResult(Verdict.TRUE, "decided", ell, eta_t)
    raise InsufficientLines("lines do not reach (eta_j^-)^(r^3)")


def count_miracles(
    children: Sequence[Slit], r: Number, lines: NearestLines, norm: Norm = SUP, budget: int = DEFAULT_BUDGET
) -> dict:
    """How many of the given slits are miracle slits (at most one is expected)."""
    verdicts = []
    for child in children:
        try:
            verdicts.append(is_miracle(child, r, lines, norm, budget).verdict.value)
        except (InsufficientLines, UndecidableError) as exc:
            verdicts.append(getattr(exc, "code", "undecidable"))
    hits = verdicts.count(Verdict.TRUE.value)
    return {"checked": len(verdicts), "miracles": hits, "passed": hits <= 1, "verdicts": verdicts}


# ---------------------------------------------------------------------------
# Liouville construction


def tilde_choices(u: Loop) -> list[Loop]:
    """The two loops t with |u x t| = 1 and 0 < |t| <= |u| (u of positive height)."""
    if u.q <= 0:
        raise PreconditionViolation("u must have positive height")
    out = []
    for s in (1, -1):
        # u.p t.q - u.q t.p = s
        if u.q == 1:
            tq = 1
        else:
            tq = (s * pow(u.p, -1, u.q)) % u.q or u.q
        num = u.p * tq - s
        assert num % u.q == 0
        out.append(Loop(num // u.q, tq))
    return sorted(out, key=lambda t: (t.q, t.p))


def d_value(w: Slit, ba: BestApprox) -> int:
    """d(w, k) = gcd(p1 + m q, p2 + n q)."""
    return math.gcd(ba.p1 + w.m * ba.q, ba.p2 + w.n * ba.q)


@dataclass
class LambdaChildren:
    parent: Slit
    u: Loop
    d: int
    u_tilde: list[Loop]
    children: list[tuple[Slit, Loop]]
    raw_count: int
    dedup_count: int
    truncated: bool
    checks: dict

    def __len__(self) -> int:
        return len(self.children)

    def __iter__(self):
        return iter(self.children)

    def to_json(self) -> dict:
        return {
            "parent": self.parent.to_json(),
            "u": self.u.to_json(),
            "d": self.d,
            "u_tilde": [t.to_json() for t in self.u_tilde],
            "raw_count": self.raw_count,
            "dedup_count": self.dedup_count,
            "truncated": self.truncated,
            "checks": self.checks,
            "children": [{"slit": s.to_json(), "v": v.to_json()} for s, v in self.children],
        }


def _progression_range(t: Loop, u: Loop, low: Real, high: Real, budget: int) -> tuple[int, int]:
    a_lo = max(1, ceil_real((low - t.q) / u.q, budget))
    a_hi = floor_real((high - t.q) / u.q, budget)
    return a_lo, a_hi


def enumerate_lambda(
    w: Slit,
    ba: BestApprox,
    r: Number,
    q_next: int | None = None,
    cap: int = 10**5,
    norm: Norm = SUP,
    budget: int = DEFAULT_BUDGET,
    verify: bool = True,
) -> LambdaChildren:
    """Lambda(w, k): v = t + a u (a > 0, both choices of t) with |w|^r <= |v| <= 2|w|^r.

    With ``verify`` each materialised child is checked for d(w', k) <= 2 and,
    where |v| < sqrt(q_{k+1}) / C~, for |w x v| |u| < 2|w|; the count bound
    |w|^(r-1) / (2 q_k) is checked whenever |w|^(r-1) >= 2 q_k.
    """
    lc = liouville_convergent(w, ba, q_next, norm, budget)
    if not lc.applicable:
        raise PreconditionViolation("Liouville convergent not applicable (height restriction fails)")
    u = lc.u
    r = Fraction(r)
    top = real_pow(w.height, r)
    choices = tilde_choices(u)
    ranges = [_progression_range(t, u, top, top * 2, budget) for t in choices]
    raw = sum(max(0, hi - lo + 1) for lo, hi in ranges)
    vs: list[Loop] = []
    for t, (lo, hi) in zip(choices, ranges):
        for a in range(lo, min(hi, lo + cap) + 1):
            vs.append(Loop(t.p + a * u.p, t.q + a * u.q))
    vs = sorted(set(vs), key=lambda v: (v.q, v.p))
    truncated = len(vs) > cap
    vs = vs[:cap]
    children = [(w.plus(v), v) for v in vs]
    checks: dict = {"liouville_status": lc.status}
    if verify:
        checks.update(lambda_checks(w, ba, u, children, raw, r, q_next, norm, budget))
    # t1 + a1 u = t2 + a2 u would force u x (t1 - t2) = 0, yet it is +-2
    return LambdaChildren(w, u, lc.d, choices, children, raw, raw, truncated, checks)


def lambda_checks(
    w: Slit,
    ba: BestApprox,
    u: Loop,
    children: Sequence[tuple[Slit, Loop]],
    count: int,
    r: Fraction,
    q_next: int | None,
    norm: Norm = SUP,
    budget: int = DEFAULT_BUDGET,
) -> dict:
    gcd_fail = [(s.m, s.n, d_value(s, ba)) for s, _ in children if d_value(s, ba) > 2]
    area_checked = area_fail = 0
    c_tilde = tilde_constant(norm)
    for _, v in children:
        if q_next is None:
            break
        if v.q * v.q * c_tilde * c_tilde >= q_next:
            continue
        area_checked += 1
        order = compare(cross(w, v) * u.q, w.height * 2, budget)
        if order is Ordering.UNDECIDABLE:
            raise UndecidableError("|w x v| |u| against 2|w| undecidable")
        if order is not Ordering.LESS:
            area_fail += 1
    power = real_pow(w.height, r - 1)
    applies = compare(power, rational(2 * ba.q), budget)
    if applies is Ordering.UNDECIDABLE:
        raise UndecidableError("|w|^(r-1) against 2 q_k undecidable")
    count_applies = applies is not Ordering.LESS
    count_ok = None
    if count_applies:
        count_ok = compare(rational(count * 2 * ba.q), power, budget) is not Ordering.LESS
    return {
        "gcd_failures": gcd_fail,
        "gcd_ok": not gcd_fail,
        "area_checked": area_checked,
        "area_failures": area_fail,
        "area_ok": area_fail == 0,
        "count": count,
        "count_bound": to_float(power / (2 * ba.q)),
        "count_applies": count_applies,
        "count_ok": count_ok,
        "passed": not gcd_fail and area_fail == 0 and count_ok is not False,
    }


# ---------------------------------------------------------------------------
# initial slit


def default_seed(context: Context, budget: int = DEFAULT_BUDGET) -> Slit:
    """Separating slit (0, n) with the smallest positive height."""
    mu = context[1]
    n = floor_real(-mu, budget) + 1
    if n % 2:
        n += 1
    return Slit(0, n, context)


def initial_slit(
    context: Context,
    ba: BestApprox,
    params: ConstructionParams,
    bounds: tuple[Number, Number] | None = None,
    seed: Slit | None = None,
    q_next: int | None = None,
    cap_bits: int = 4096,
    norm: Norm = SUP,
    budget: int = DEFAULT_BUDGET,
) -> Slit:
    """w0 with d(w0, k0) <= 2 and height in [q^M', q^(M' r)) (or toy ``bounds``).

    Walks the progression Lambda_1(seed, k0); adjacent members differ in
    height by 2|u|, so the first member above the lower bound is taken.
    """
    q = ba.q
    if bounds is None:
        lo_r: Real = real_pow(rational(q), params.M_prime)
        hi_r: Real = real_pow(rational(q), params.M_prime * params.r)
        if float(params.M_prime) * math.log2(q) > cap_bits:
            raise NotFoundAtCap(
                f"|w0| >= q^M' needs about {float(params.M_prime) * math.log2(q):.3g} bits (cap {cap_bits})"
            )
    else:
        lo_r, hi_r = rational(bounds[0]), rational(bounds[1])
    seed = seed or default_seed(context, budget)
    if compare(seed.height * 4, rational(q), budget) is not Ordering.LESS:
        raise PreconditionViolation("seed slit must have height below q_k0 / 4")
    if compare(seed.y, rational(0), budget) is not Ordering.GREATER:
        raise PreconditionViolation("seed slit must point upwards")
    lc = liouville_convergent(seed, ba, q_next, norm, budget)
    u = lc.u
    for t in tilde_choices(u):
        # |seed + 2(t + a u)| = |seed| + 2 t_q + 2 a u_q
        a = max(1, ceil_real((lo_r - seed.height - 2 * t.q) / (2 * u.q), budget))
        v = Loop(t.p + a * u.p, t.q + a * u.q)
        w0 = seed.plus(v)
        if compare(w0.height, hi_r, budget) is Ordering.LESS:
            if d_value(w0, ba) > 2:
                raise AssertionError("Lambda_1 walk produced d > 2")
            return w0
    raise NotFoundAtCap("no Lambda_1 member in the requested height window")


def find_slit(
    context: Context,
    low: Number,
    high: Number,
    predicate,
    m_window: int = 8,
    cap: int = 2000,
    budget: int = DEFAULT_BUDGET,
) -> Slit:
    """First separating slit with low <= |w| < high (scanning n, then m) passing ``predicate``."""
    mu = context[1]
    n = ceil_real(rational(Fraction(low)) - mu, budget)
    if n % 2:
        n += 1
    tried = 0
    while True:
        w_n = Slit(0, n, context)
        if compare(w_n.height, rational(Fraction(high)), budget) is not Ordering.LESS:
            break
        for m in range(-2 * m_window, 2 * m_window + 1, 2):
            w = Slit(m, n, context)
            tried += 1
            if predicate(w):
                return w
            if tried >= cap:
                raise NotFoundAtCap(f"no slit found after {cap} candidates")
        n += 2
    raise NotFoundAtCap("height window exhausted")


def has_inner_convergent(w: Slit, r: Number, budget: int = DEFAULT_BUDGET) -> bool:
    """Some convergent height q with |w| < q < |w|^r."""
    top = real_pow(w.height, Fraction(r))
    spec = spectrum(w, height_max=top, budget=budget)
    for q in spec.heights:
        if compare(rational(q), w.height, budget) is Ordering.GREATER and compare(rational(q), top, budget) is Ordering.LESS:
            return True
    return False


# ---------------------------------------------------------------------------
# height intervals and transition indices


def _log_hj_bounds(j: int, log_w0: Real, r: Fraction) -> tuple[Real, Real]:
    """log inf H_j and log sup H_j."""
    rj = r**j
    low = log_w0 * rj
    high = low + real_log(rational(5)) * ((rj - 1) / (r - 1))
    return low, high


@dataclass
class RegionIndices:
    per_k: list[dict]
    certificates: dict
    w0_height: float

    def to_json(self) -> dict:
        return {"per_k": self.per_k, "certificates": self.certificates, "w0_height": self.w0_height}


def _first_j(pred, limit: int = 4096) -> int:
    for j in range(limit):
        if pred(j):
            return j
    raise ScheduleInfeasible("index search ran past its limit")


def _last_j(pred, limit: int = 4096) -> int:
    """max{j : pred(j)} for a predicate true on an initial segment; -1 if never."""
    last = -1
    for j in range(limit):
        if not pred(j):
            return last
        last = j
    raise ScheduleInfeasible("index search ran past its limit")


def region_indices(
    qs: Sequence[int],
    params: ConstructionParams,
    w0_height: Real | Number,
    k0: int | None = None,
    strict: bool = True,
    budget: int = DEFAULT_BUDGET,
) -> RegionIndices:
    """j^C_k, j_k, j^D_k and j^B_{k'} for consecutive k < k' of l_N (1-based k).

    All comparisons take logarithms of H_j, I^C_k and I^D_k endpoints, which
    are astronomically large at honest parameters.
    """
    ks = _ell_n_logs(qs, params.N, budget)
    if k0 is not None:
        ks = [k for k in ks if k >= k0]
    if not ks:
        raise ScheduleInfeasible("l_N is empty for these denominators; use the finite-ellN mode")
    r = params.r
    h = as_real(w0_height)
    log_w0 = real_log(h)
    log5 = real_log(rational(5))
    three_r = 3 * r

    def log_q(k: int) -> Real:
        return real_log(rational(qs[k - 1]))

    def lt(a: Real, b: Real) -> bool:
        order = compare(a, b, budget)
        if order is Ordering.UNDECIDABLE:
            raise UndecidableError("index comparison undecidable")
        return order is Ordering.LESS

    failures: list[str] = []
    # Lemma H_j: sup H_j < inf H_{j+1}, implied by |w0|^((r-1)^2) > 5
    h_disjoint = lt(log5, log_w0 * (r - 1) ** 2)
    if not h_disjoint:
        failures.append("|w0|^((r-1)^2) > 5 fails")
    per_k = []
    for idx, k in enumerate(ks):
        if k >= len(qs):
            break
        k_next = ks[idx + 1] if idx + 1 < len(ks) else None
        top_c = log_q(k + 1) / three_r  # log of q_{k+1}^(1/3r)
        j_c = _first_j(lambda j: not lt(_log_hj_bounds(j, log_w0, r)[0], log_q(k) * params.M_prime))
        j_k = _last_j(lambda j: lt(_log_hj_bounds(j + 1, log_w0, r)[1], top_c))
        entry: dict = {"k": k, "q_k": qs[k - 1], "jC": j_c, "j_k": j_k, "jD": j_k}
        if k_next is not None and k_next <= len(qs):
            top_d = log_q(k_next) / three_r
            entry["k_next"] = k_next
            entry["jB_next"] = _last_j(lambda j: lt(_log_hj_bounds(j, log_w0, r)[1], top_d))
        low_d = log_q(k + 1) / (3 * r**5)
        inside = []
        for j in range(max(0, j_c), max(j_c, j_k) + 8):
            lo, hi = _log_hj_bounds(j, log_w0, r)
            in_c = not lt(lo, log_q(k) * params.M_prime) and lt(hi, top_c)
            in_d = not lt(lo, low_d) and (
                k_next is None or k_next > len(qs) or lt(hi, log_q(k_next) / three_r)
            )
            if in_c and in_d:
                inside.append(j)
        entry["H_in_IC_and_ID"] = inside
        per_k.append(entry)
    # certificates
    order_ok = True
    gap_ok = True
    bound = math.log(3 * float(params.M_prime)) / math.log(float(r)) + 4
    for prev, cur in zip(per_k, per_k[1:]):
        j_b = prev.get("jB_next")
        if j_b is None:
            continue
        cur["jB"] = j_b
        if not (j_b < cur["jC"] < cur["jD"]) or not prev["jD"] <= j_b:
            order_ok = False
        if cur["jC"] > j_b + bound:
            gap_ok = False
    for entry in per_k:
        if not entry["jC"] < entry["jD"] and entry is not per_k[0]:
            order_ok = False
    ikcd3 = all(len(e["H_in_IC_and_ID"]) >= 3 for e in per_k)
    if not order_ok:
        failures.append("jB_k < jC_k < jD_k <= jB_k' fails")
    if not gap_ok:
        failures.append("jC_k <= jB_k + log_r(3M') + 4 fails")
    if not ikcd3:
        failures.append("#{j : H_j in I^C_k and I^D_k} >= 3 fails")
    certs = {
        "H_disjoint": h_disjoint,
        "indices_ordered": order_ok,
        "bounded_region_length": gap_ok,
        "three_levels_in_overlap": ikcd3,
        "failures": failures,
    }
    if failures and strict:
        raise ScheduleInfeasible("; ".join(failures))
    return RegionIndices(per_k, certs, to_float(h))


def _ell_n_logs(qs: Sequence[int], n: Fraction, budget: int) -> list[int]:
    """l_N decided with logarithms (integer powers blow up for rational N)."""
    n = Fraction(n)
    if n.numerator < 64 and n.denominator < 64:
        return ell_n(qs, n)
    out = []
    for k, (a, b) in enumerate(zip(qs, qs[1:]), start=1):
        order = compare(real_log(rational(b)), real_log(rational(a)) * n, budget)
        if order is Ordering.UNDECIDABLE:
            raise UndecidableError("q_{k+1} against q_k^N undecidable")
        if order is Ordering.GREATER:
            out.append(k)
    return out


def h_intervals(w0_height: Real | Number, r: Number, count: int) -> list[tuple[float, float]]:
    """log10 of the endpoints of H_0 .. H_{count-1}."""
    log_w0 = real_log(as_real(w0_height))
    out = []
    for j in range(count):
        lo, hi = _log_hj_bounds(j, log_w0, Fraction(r))
        out.append((to_float(lo) / math.log(10), to_float(hi) / math.log(10)))
    return out


def k0_lower_bound_log(params: ConstructionParams, norm: Norm = SUP) -> float:
    """Natural log of the largest term in the k0 requirement."""
    rho, n_prime = float(params.rho), float(params.N_prime)
    log_rho = math.log(rho)
    c_prime = float(norm.equiv_upper)
    terms = [
        float(params.M) * math.log(float(params.c)),
        math.log(60 / float(params.c0)) + (n_prime + 3) * log_rho,
        math.log(4) + n_prime * log_rho + math.log(math.log(3 * float(params.M_prime)) / math.log(float(params.r)) + 4),
        7 * math.log(2) + n_prime * log_rho,
        math.log(48 * c_prime),
    ]
    return max(terms)


# ---------------------------------------------------------------------------
# strips and clusters


def _log_le(count: int, coeff: Number, base: Number, exponent: Number, budget: int) -> bool:
    """count <= coeff * base^exponent, compared through logarithms."""
    if count <= 0:
        return True
    lhs = real_log(rational(count))
    rhs = real_log(rational(Fraction(coeff))) + real_log(as_real(base)) * Fraction(exponent)
    order = compare(lhs, rhs, budget)
    if order is Ordering.UNDECIDABLE:
        raise UndecidableError("counting bound undecidable")
    return order is not Ordering.GREATER


def top_convergent(w: Slit, r: Number, budget: int = DEFAULT_BUDGET) -> Convergent:
    """u(w): the convergent of the inverse slope with maximal height below |w|^r."""
    top = real_pow(w.height, Fraction(r))
    spec = spectrum(w, height_max=top, budget=budget)
    best = None
    for conv in spec.convergents:
        order = compare(rational(conv.q), top, budget)
        if order is Ordering.UNDECIDABLE:
            raise UndecidableError("convergent height against |w|^r undecidable")
        if order is Ordering.LESS:
            best = conv
    if best is None:
        raise PreconditionViolation("no convergent below |w|^r")
    return best


def strips_clusters_audit(
    w: Slit,
    alpha: Number,
    non_normal_children: Sequence[Slit],
    params: ConstructionParams,
    n_prime: Number | None = None,
    budget: int = DEFAULT_BUDGET,
) -> dict:
    """Group non-normal children by strip integer a and by cluster; check the three bounds.

    The strip integer solves |(w x u(w')) + 2a| small, i.e. a is the nearest
    integer to -(w x u(w'))/2.  Two children share a cluster when they share
    a and u(w'') - u(w') is a multiple of u, i.e. u x u(w') agrees.
    """
    r = params.r
    alpha = Fraction(alpha)
    n_prime = params.N_prime if n_prime is None else Fraction(n_prime)
    rho = params.rho
    five = compare(real_pow(w.height, (r - 1) ** 2), rational(5), budget)
    if five is Ordering.UNDECIDABLE:
        raise UndecidableError("|w|^((r-1)^2) against 5 undecidable")
    if five is Ordering.LESS:
        raise PreconditionViolation("strips/clusters audit needs |w|^((r-1)^2) >= 5")
    u = top_convergent(w, r, budget)
    strips: dict[int, list] = {}
    clusters: dict[tuple[int, int], list] = {}
    a_bound_ok = True
    for child in non_normal_children:
        uc = top_convergent(child, r, budget)
        value = signed_cross(w, (uc.p, uc.q))
        a = round_real(-value / 2, budget)
        key = (a, u.p * uc.q - u.q * uc.p)
        strips.setdefault(a, []).append((child.m, child.n))
        clusters.setdefault(key, []).append((child.m, child.n))
        if a != 0 and not _log_le(abs(a), 2, rho, n_prime + 1, budget):
            a_bound_ok = False
    n_strips, n_clusters = len(strips), len(clusters)
    largest = max((len(v) for v in clusters.values()), default=0)
    strips_ok = _log_le(n_strips, 4, rho, n_prime + 1, budget)
    clusters_ok = n_clusters == 0 or compare(
        real_log(rational(n_clusters)),
        real_log(rational(6 * alpha)) + real_log(rational(rho)) * (n_prime + 1),
        budget,
    ) is not Ordering.GREATER
    exponent = (r - 1) - (r - 1) ** 2
    size_ok = _log_le(largest, 5, w.height, exponent, budget)
    return {
        "children": len(non_normal_children),
        "u": str(u),
        "strips": {str(k): v for k, v in sorted(strips.items())},
        "clusters": [{"a": k[0], "u_cross": k[1], "members": v} for k, v in sorted(clusters.items())],
        "strip_count": n_strips,
        "cluster_count": n_clusters,
        "largest_cluster": largest,
        "n_prime": fraction_to_str(n_prime),
        "strip_integer_bound_ok": a_bound_ok,
        "strips_ok": strips_ok,
        "clusters_ok": clusters_ok,
        "cluster_size_ok": size_ok,
        "vacuous": not non_normal_children,
        "passed": a_bound_ok and strips_ok and clusters_ok and size_ok,
    }


def next_denominator_lower(ba: BestApprox, budget: int = DEFAULT_BUDGET) -> int:
    """Certified lower bound for q_{k+1} from 1/(2 q_{k+1}) <= ||q_k x - p_k||."""
    if isinstance(ba.err, Real) and compare(ba.err, rational(0), budget) is Ordering.EQUAL:
        raise PreconditionViolation("x is rational at this denominator; no next best approximation")
    return ceil_real(1 / (ba.err * 2), budget)
