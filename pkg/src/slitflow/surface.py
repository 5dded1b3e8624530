"""Holonomy combinatorics of the slit-glued double torus.

Loops are primitive integer vectors (p, q).  A slit is indexed by integers
(m, n) over a fixed context (lambda, mu) and has holonomy
(lambda + m, mu + n); its height is |mu + n|.  Directions are given by their
inverse slope theta, and hor_theta(x, y) = |y * theta - x|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence, Union

from .bestapprox import BestApprox, dirichlet_constant
from .errors import DegenerateError, PreconditionViolation, UndecidableError
from .numerics import (
    DEFAULT_BUDGET,
    SUP,
    ExactReal,
    Norm,
    Ordering,
    Real,
    Verdict,
    absolute,
    as_real,
    compare,
    floor_real,
    rational,
    round_real,
    sign,
    to_float,
)

Context = tuple[Real, Real]


@dataclass(frozen=True)
class Loop:
    p: int
    q: int

    def __post_init__(self) -> None:
        if math.gcd(self.p, self.q) != 1:
            raise ValueError(f"loop ({self.p}, {self.q}) is not primitive")

    @property
    def vector(self) -> tuple[Real, Real]:
        return rational(self.p), rational(self.q)

    @property
    def height(self) -> int:
        return abs(self.q)

    def to_json(self) -> dict:
        return {"p": self.p, "q": self.q}


@dataclass(frozen=True)
class Slit:
    m: int
    n: int
    context: Context = field(compare=False)

    def __post_init__(self) -> None:
        if isinstance(self.height, ExactReal) and self.height.is_zero():
            raise DegenerateError(f"slit ({self.m}, {self.n}) has zero height")

    @property
    def x(self) -> Real:
        return self.context[0] + self.m

    @property
    def y(self) -> Real:
        return self.context[1] + self.n

    @property
    def vector(self) -> tuple[Real, Real]:
        return self.x, self.y

    @property
    def height(self) -> Real:
        return absolute(self.y)

    @property
    def separating(self) -> bool:
        return self.m % 2 == 0 and self.n % 2 == 0

    def inverse_slope(self) -> Real:
        return self.x / self.y

    def twist(self, v: Loop, times: int = 1) -> "Slit":
        """Dehn twist image w + 2 t v (stays separating iff w is)."""
        return Slit(self.m + 2 * times * v.p, self.n + 2 * times * v.q, self.context)

    def plus(self, v: Loop, factor: int = 2) -> "Slit":
        return Slit(self.m + factor * v.p, self.n + factor * v.q, self.context)

    def to_json(self) -> dict:
        return {"m": self.m, "n": self.n, "height": to_float(self.height)}


def separating_slit(m: int, n: int, context: Context) -> Slit:
    if m % 2 or n % 2:
        raise ValueError(f"({m}, {n}) is not a separating slit index")
    return Slit(m, n, context)


def is_dehn_twist(w: Slit, w2: Slit, v: Loop) -> bool:
    """True iff w2 - w is an even multiple of v (same context assumed)."""
    dm, dn = w2.m - w.m, w2.n - w.n
    if dm * v.q != dn * v.p:
        return False
    t = Fraction(dm, v.p) if v.p else Fraction(dn, v.q)
    return t.denominator == 1 and t.numerator % 2 == 0


Vectorish = Union[Loop, Slit, Sequence]


def _coords(v: Vectorish) -> tuple[Real, Real]:
    if isinstance(v, (Loop, Slit)):
        return v.vector
    return as_real(v[0]), as_real(v[1])


def cross(u: Vectorish, v: Vectorish) -> Real:
    """|u_x v_y - u_y v_x| (exact whenever the inputs are)."""
    ux, uy = _coords(u)
    vx, vy = _coords(v)
    return absolute(ux * vy - uy * vx)


def signed_cross(u: Vectorish, v: Vectorish) -> Real:
    ux, uy = _coords(u)
    vx, vy = _coords(v)
    return ux * vy - uy * vx


def hor(theta: Real, v: Vectorish) -> Real:
    x, y = _coords(v)
    return absolute(y * as_real(theta) - x)


# ---------------------------------------------------------------------------
# Z-expansions


@dataclass(frozen=True)
class ZEntry:
    kind: str  # "loop" or "slit"
    a: int  # p for loops, m for slits
    b: int  # q for loops, n for slits
    height: Real
    hor: Real

    def vector(self, context: Context) -> tuple[Real, Real]:
        if self.kind == "loop":
            return rational(self.a), rational(self.b)
        return context[0] + self.a, context[1] + self.b

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "vector": [self.a, self.b],
            "height": to_float(self.height),
            "hor": to_float(self.hor),
        }


@dataclass
class ZExpansion:
    theta: Real
    context: Context
    entries: list[ZEntry]
    height_max: int
    terminated: bool = False

    @property
    def heights(self) -> list[Real]:
        return [e.height for e in self.entries]

    def to_json(self) -> dict:
        return {
            "height_max": self.height_max,
            "terminated": self.terminated,
            "entries": [e.to_json() for e in self.entries],
        }


def _loop_candidates(theta: Real, height_max: int, budget: int) -> Iterator[ZEntry]:
    yield ZEntry("loop", 1, 0, rational(0), rational(1))
    for q in range(1, height_max + 1):
        p = round_real(theta * q, budget)
        if math.gcd(p, q) != 1:
            # the reduced vector is lower and strictly closer
            continue
        yield ZEntry("loop", p, q, rational(q), absolute(theta * q - p))


def _slit_candidates(theta: Real, context: Context, height_max: int, budget: int) -> Iterator[ZEntry]:
    lam, mu = context
    # V_2 slits with mu + 2n > 0, in increasing height
    n = floor_real(-mu / 2, budget) + 1
    while True:
        y = mu + 2 * n
        if compare(y, rational(height_max), budget) is Ordering.GREATER:
            return
        m = round_real((y * theta - lam) / 2, budget)
        yield ZEntry("slit", 2 * m, 2 * n, y, absolute(y * theta - lam - 2 * m))
        n += 1


def _merged(streams: list[Iterator[ZEntry]], budget: int) -> Iterator[ZEntry]:
    heads = [next(s, None) for s in streams]
    while any(h is not None for h in heads):
        best = None
        for i, h in enumerate(heads):
            if h is None:
                continue
            if best is None:
                best = i
                continue
            order = compare(h.height, heads[best].height, budget)  # type: ignore[union-attr]
            if order is Ordering.UNDECIDABLE:
                raise UndecidableError("candidate heights not separable")
            if order is Ordering.LESS:
                best = i
        assert best is not None
        yield heads[best]  # type: ignore[misc]
        heads[best] = next(streams[best], None)


def z_expansion(theta: Real, context: Context, height_max: int, budget: int = DEFAULT_BUDGET) -> ZExpansion:
    """Z-convergents (Z = loops together with separating slits) up to ``height_max``."""
    if height_max < 1:
        raise ValueError("height_max must be at least 1")
    theta = as_real(theta)
    context = (as_real(context[0]), as_real(context[1]))
    stream = _merged(
        [_loop_candidates(theta, height_max, budget), _slit_candidates(theta, context, height_max, budget)],
        budget,
    )
    entries: list[ZEntry] = []
    pending: ZEntry | None = None

    def flush() -> bool:
        nonlocal pending
        if pending is None:
            return False
        if entries:
            order = compare(pending.hor, entries[-1].hor, budget)
            if order is Ordering.UNDECIDABLE:
                raise UndecidableError("hor values not separable")
            if order is not Ordering.LESS:
                pending = None
                return False
        entries.append(pending)
        done = isinstance(pending.hor, ExactReal) and pending.hor.is_zero()
        pending = None
        return done

    for cand in stream:
        if pending is not None:
            same = compare(cand.height, pending.height, budget)
            if same is Ordering.UNDECIDABLE:
                raise UndecidableError("candidate heights not separable")
            if same is Ordering.EQUAL:
                # equal heights: keep the smaller hor, first one on a tie
                if compare(cand.hor, pending.hor, budget) is Ordering.LESS:
                    pending = cand
                continue
            if flush():
                return ZExpansion(theta, context, entries, height_max, terminated=True)
        pending = cand
    terminated = flush()
    return ZExpansion(theta, context, entries, height_max, terminated=terminated)


def alternation_report(ze: ZExpansion) -> dict:
    """Where entries start alternating loop/separating slit, and the cross-product sum."""
    kinds = [e.kind for e in ze.entries]
    start = len(kinds)
    for i in range(len(kinds) - 1, -1, -1):
        if i + 1 < len(kinds) and kinds[i] == kinds[i + 1]:
            break
        start = i
    partial = 0.0
    partials = []
    pairs = []
    for e, nxt in zip(ze.entries, ze.entries[1:]):
        if e.kind == "slit" and nxt.kind == "loop":
            value = to_float(cross(e.vector(ze.context), nxt.vector(ze.context)))
            partial += value
            partials.append(partial)
            pairs.append({"slit": [e.a, e.b], "loop": [nxt.a, nxt.b], "cross": value})
    return {
        "alternating_from": start if start < len(kinds) else None,
        "alternating_length": len(kinds) - start,
        "cross_pairs": pairs,
        "cross_partial_sums": partials,
    }


# ---------------------------------------------------------------------------
# growth relative to Z


def _log_height(h: Union[Real, int, Fraction]) -> float:
    if isinstance(h, int):
        return math.log(h)
    if isinstance(h, Fraction):
        return math.log(h.numerator) - math.log(h.denominator)
    return math.log(to_float(h))


def classify_rel_Z(heights: Union[ZExpansion, Sequence], threshold: float = 4.0) -> dict:
    """Exponents log|w_{k+1}| / log|w_k| and a growth tag.

    Heights <= 1 are skipped (their logarithm is not positive).  The tag is
    liouville-like when the largest exponent reaches ``threshold``, otherwise
    diophantine-like with the observed maximum.
    """
    values = heights.heights if isinstance(heights, ZExpansion) else list(heights)
    logs = [_log_height(h) for h in values]
    logs = [v for v in logs if v > 0]
    if len(logs) < 3:
        raise ValueError("need at least three heights above 1")
    exponents = [b / a for a, b in zip(logs, logs[1:])]
    top = max(exponents)
    tag = "liouville-like" if top >= threshold else f"diophantine-like({top:.6g})"
    return {"exponents": exponents, "max_exponent": top, "threshold": threshold, "tag": tag}


# ---------------------------------------------------------------------------
# Liouville convergents


def tilde_constant(norm: Norm = SUP) -> Fraction:
    return 16 * dirichlet_constant(norm)


@dataclass
class LiouvilleConvergent:
    u: Loop
    d: int
    status: str  # "applicable", "restriction-unverified" or "not-applicable"
    bound_certified: bool
    details: dict = field(default_factory=dict)

    @property
    def applicable(self) -> bool:
        return self.status != "not-applicable"

    def to_json(self) -> dict:
        return {
            "u": self.u.to_json(),
            "d": self.d,
            "status": self.status,
            "bound_certified": self.bound_certified,
            **self.details,
        }


def height_restriction(w: Slit, q: int, q_next: int, norm: Norm = SUP, budget: int = DEFAULT_BUDGET) -> Verdict:
    """|w| < sqrt(q_next) / (C~ q), compared as |w|^2 C~^2 q^2 < q_next."""
    c = tilde_constant(norm)
    lhs = w.y * w.y * (c * c * q * q)
    order = compare(lhs, rational(q_next), budget)
    if order is Ordering.UNDECIDABLE:
        return Verdict.UNDECIDABLE
    return Verdict.of(order is Ordering.LESS)


def liouville_convergent(
    w: Slit,
    ba: BestApprox,
    q_next: int | None = None,
    norm: Norm = SUP,
    budget: int = DEFAULT_BUDGET,
) -> LiouvilleConvergent:
    """Reduced (p1 + m q, p2 + n q) / d with u normalised to positive height."""
    a = ba.p1 + w.m * ba.q
    b = ba.p2 + w.n * ba.q
    if b == 0:
        raise DegenerateError("p2 + n q = 0: the Liouville convergent is horizontal")
    d = math.gcd(a, b)
    s = 1 if b > 0 else -1
    u = Loop(s * a // d, s * b // d)
    # q|w|/2 < |p2 + n q| < 2 q |w|
    scaled = w.height * ba.q
    lower = compare(scaled / 2, rational(abs(b)), budget)
    upper = compare(rational(abs(b)), scaled * 2, budget)
    certified = lower is Ordering.LESS and upper is Ordering.LESS
    details: dict = {"d_times_height": abs(b)}
    if q_next is None:
        status = "restriction-unverified"
    else:
        verdict = height_restriction(w, ba.q, q_next, norm, budget)
        details["height_restriction"] = verdict.value
        status = "applicable" if verdict is Verdict.TRUE else "not-applicable"
    return LiouvilleConvergent(u, d, status, certified, details)


# ---------------------------------------------------------------------------
# minimal-area lemma


def in_s_k(w: Slit, q_k: int, q_next: int, budget: int = DEFAULT_BUDGET) -> Verdict:
    """q_k < |w| and |w|^2 q_k^4 < q_{k+1} (the window where n_k applies)."""
    h = w.height
    first = compare(rational(q_k), h, budget)
    second = compare(h * h * (q_k**4), rational(q_next), budget)
    if Ordering.UNDECIDABLE in (first, second):
        return Verdict.UNDECIDABLE
    return Verdict.of(first is Ordering.LESS and second is Ordering.LESS)


def n_k(q_k: int, q_next: int) -> float:
    """(1/2) log_{q_k} q_{k+1} - 2, for reporting only."""
    return 0.5 * math.log(q_next) / math.log(q_k) - 2


def min_area_check(
    triple: Sequence[Slit], v: Loop, q_k: int, q_next: int, budget: int = DEFAULT_BUDGET
) -> dict:
    """For three consecutive separating slits in S_k, |w_j x v_j| > 1/(4 q_k)."""
    if len(triple) != 3:
        raise PreconditionViolation("need exactly three slits")
    for w in triple:
        if not w.separating:
            raise PreconditionViolation(f"slit ({w.m}, {w.n}) is not separating")
        verdict = in_s_k(w, q_k, q_next, budget)
        if verdict is not Verdict.TRUE:
            raise PreconditionViolation(f"slit ({w.m}, {w.n}) has height outside S_k")
    value = cross(triple[0], v)
    order = compare(value, rational(Fraction(1, 4 * q_k)), budget)
    if order is Ordering.UNDECIDABLE:
        raise UndecidableError("cross product against 1/(4 q_k) undecidable")
    return {
        "cross": to_float(value),
        "bound": 1 / (4 * q_k),
        "n_k": n_k(q_k, q_next),
        "passed": order is Ordering.GREATER,
    }


def direction_sign(theta: Real, v: Vectorish, budget: int = DEFAULT_BUDGET) -> int:
    x, y = _coords(v)
    return sign(y * as_real(theta) - x, budget)
