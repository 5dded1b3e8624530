"""Continued fractions of computable reals and the Khinchin criteria."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import islice
from typing import Iterator

from .numerics import (
    DEFAULT_BUDGET,
    BudgetExceeded,
    DecimalReal,
    ExactReal,
    Ordering,
    Real,
    UndecidableError,
    Verdict,
    absolute,
    as_real,
    compare,
    rational,
    sign,
)


@dataclass(frozen=True, order=True)
class Convergent:
    """Reduced fraction p/q with q > 0."""

    p: int
    q: int

    def __post_init__(self) -> None:
        if self.q <= 0:
            raise ValueError("denominator must be positive")
        if math.gcd(self.p, self.q) != 1:
            raise ValueError(f"{self.p}/{self.q} is not reduced")

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)

    def __str__(self) -> str:
        return f"{self.p}/{self.q}"


@dataclass
class CFExpansion:
    a0: int
    partial_quotients: list[int]
    convergents: list[Convergent]
    exact_termination: bool = False

    @property
    def quotients(self) -> list[int]:
        return [self.a0, *self.partial_quotients]

    @property
    def denominators(self) -> list[int]:
        return [c.q for c in self.convergents]

    def to_json(self) -> dict:
        return {
            "quotients": self.quotients,
            "convergents": [str(c) for c in self.convergents],
            "exact_termination": self.exact_termination,
        }


# quotient streams --------------------------------------------------------------


def _euclid(x: Fraction) -> Iterator[int]:
    num, den = x.numerator, x.denominator
    while den:
        a = num // den
        yield a
        num, den = den, num - a * den


def _quadratic_quotients(x: ExactReal) -> Iterator[int]:
    """Exact expansion of a + b*sqrt(d) through the (P + sqrt(D))/Q recurrence."""
    a = x.rational_part
    (d, b), = x.radical_terms
    lcd = a.denominator * b.denominator // math.gcd(a.denominator, b.denominator)
    big_a, big_b = int(a * lcd), int(b * lcd)
    p_, q_, disc = big_a, lcd, big_b * big_b * d
    if big_b < 0:
        p_, q_ = -p_, -q_
    if (disc - p_ * p_) % q_:
        p_, disc, q_ = p_ * abs(q_), disc * q_ * q_, q_ * abs(q_)
    root = math.isqrt(disc)
    while True:
        if q_ > 0:
            quotient = (p_ + root) // q_
        else:
            quotient = -((p_ + root) // -q_) - 1
        yield quotient
        p_ = quotient * q_ - p_
        q_ = (disc - p_ * p_) // q_


def _interval_prefix(lo: Fraction, hi: Fraction) -> tuple[list[int], bool]:
    """Quotients shared by every number in [lo, hi]; flag says lo == hi."""
    if lo == hi:
        return list(_euclid(lo)), True
    out: list[int] = []
    while True:
        a = math.floor(lo)
        if math.floor(hi) != a:
            return out, False
        if lo == a:
            # the remainder of lo is infinite; the interval still straddles
            return out, False
        out.append(a)
        lo, hi = 1 / (hi - a), 1 / (lo - a)


def quotient_stream(theta: Real, budget: int = DEFAULT_BUDGET) -> Iterator[int]:
    """Lazy certified partial quotients a0, a1, ...; finite iff theta is rational.

    Raises :class:`UndecidableError` once the next quotient cannot be settled
    within the precision budget.
    """
    theta = as_real(theta)
    if isinstance(theta, ExactReal):
        if theta.kind == "rational":
            yield from _euclid(theta.rational_part)
            return
        if theta.kind == "quadratic":
            yield from _quadratic_quotients(theta)
            return
    emitted = 0
    precision = 64
    cap = theta.max_precision()
    while True:
        effective = precision if cap is None else min(precision, cap)
        try:
            iv = theta._raw_enclose(effective)
        except BudgetExceeded as exc:
            raise UndecidableError(str(exc)) from exc
        prefix, exact = _interval_prefix(iv.lo, iv.hi)
        for a in prefix[emitted:]:
            yield a
        emitted = max(emitted, len(prefix))
        if exact:
            return
        if precision >= budget or (cap is not None and cap < precision):
            raise UndecidableError(
                f"partial quotient {emitted} of {theta.to_literal()} undecidable at {budget} bits"
            )
        precision = min(2 * precision, budget)


def next_quotient_floor(theta: Real, quotients: list[int], budget: int = DEFAULT_BUDGET) -> int | None:
    """Certified lower bound for the partial quotient after ``quotients``.

    Useful when that quotient is too large to pin down: every number in the
    budget enclosure shares the given prefix, so the remainder interval
    bounds the next quotient from below.  None when the enclosure no longer
    shares the prefix.
    """
    theta = as_real(theta)
    cap = theta.max_precision()
    try:
        iv = theta._raw_enclose(budget if cap is None else min(budget, cap))
    except BudgetExceeded:
        return None
    lo, hi = iv.lo, iv.hi
    for a in quotients:
        if math.floor(lo) != a or math.floor(hi) != a or lo == a:
            return None
        lo, hi = 1 / (hi - a), 1 / (lo - a)
    return math.floor(lo)


def convergents_from_quotients(quotients: list[int]) -> list[Convergent]:
    out: list[Convergent] = []
    p_prev, q_prev, p, q = 0, 1, 1, 0
    for a in quotients:
        p_prev, q_prev, p, q = p, q, a * p + p_prev, a * q + q_prev
        out.append(Convergent(p, q))
    return out


def cf_expand(theta: Real, depth: int, budget: int = DEFAULT_BUDGET) -> CFExpansion:
    """First ``depth`` partial quotients (a0 included) with their convergents."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    stream = quotient_stream(theta, budget)
    quotients = list(islice(stream, depth))
    exact = len(quotients) < depth
    if not exact and isinstance(theta, ExactReal) and theta.kind == "rational":
        exact = next(stream, None) is None
    return CFExpansion(quotients[0], quotients[1:], convergents_from_quotients(quotients), exact)


def convergents(theta: Real, depth: int, budget: int = DEFAULT_BUDGET) -> list[Convergent]:
    return cf_expand(theta, depth, budget).convergents


def convergents_up_to(theta: Real, q_max: int, budget: int = DEFAULT_BUDGET) -> list[Convergent]:
    """All convergents with denominator at most ``q_max``."""
    out: list[Convergent] = []
    p_prev, q_prev, p, q = 0, 1, 1, 0
    for a in quotient_stream(theta, budget):
        p_next, q_next = a * p + p_prev, a * q + q_prev
        if q_next > q_max:
            break
        p_prev, q_prev, p, q = p, q, p_next, q_next
        out.append(Convergent(p, q))
    return out


# Khinchin criteria --------------------------------------------------------------


def khinchin19_predicate(theta: Real, f: Convergent | Fraction, budget: int = DEFAULT_BUDGET) -> Verdict:
    """|theta - p/q| < 1/(2 q^2); such a fraction is necessarily a convergent."""
    value = f.value if isinstance(f, Convergent) else Fraction(f)
    q = value.denominator
    distance = absolute(as_real(theta) - value)
    order = compare(distance, rational(Fraction(1, 2 * q * q)), budget)
    if order is Ordering.UNDECIDABLE:
        return Verdict.UNDECIDABLE
    return Verdict.of(order is Ordering.LESS)


def convergent_bounds_check(theta: Real, k: int, budget: int = DEFAULT_BUDGET) -> dict:
    """Check 1/(q_k (q_k + q_{k+1})) < |theta - p_k/q_k| <= 1/(q_k q_{k+1})."""
    if k < 0:
        raise ValueError("k must be non-negative")
    expansion = cf_expand(theta, k + 2, budget)
    convs = expansion.convergents
    if len(convs) <= k:
        raise ValueError(f"expansion has only {len(convs)} convergents")
    ck = convs[k]
    report: dict = {"k": k, "convergent": str(ck), "vacuous": False}
    if len(convs) == k + 1:
        # theta equals its last convergent: distance 0 and no q_{k+1}
        report.update(passed=True, vacuous=True, lower_ok=True, upper_ok=True)
        return report
    q_next = convs[k + 1].q
    distance = absolute(as_real(theta) - ck.value)
    lower = Fraction(1, ck.q * (ck.q + q_next))
    upper = Fraction(1, ck.q * q_next)
    lower_order = compare(rational(lower), distance, budget)
    upper_order = compare(distance, rational(upper), budget)
    if Ordering.UNDECIDABLE in (lower_order, upper_order):
        raise UndecidableError(f"bounds for convergent {ck} undecidable at {budget} bits")
    lower_ok = lower_order is Ordering.LESS
    upper_ok = upper_order in (Ordering.LESS, Ordering.EQUAL)
    report.update(
        q_next=q_next,
        lower=str(lower),
        upper=str(upper),
        lower_ok=lower_ok,
        upper_ok=upper_ok,
        passed=lower_ok and upper_ok,
    )
    return report


def alternation_signs(theta: Real, convs: list[Convergent], budget: int = DEFAULT_BUDGET) -> list[int]:
    """Sign of theta - p_k/q_k for each convergent (0 on an exact hit)."""
    return [sign(as_real(theta) - c.value, budget) for c in convs]
