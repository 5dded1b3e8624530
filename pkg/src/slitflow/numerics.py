"""Exact and enclosure arithmetic.

A :class:`Real` is anything that can hand out a rational interval of width at
most ``2**-p`` containing its value.  Three literal kinds are supported
(rational, quadratic ``a + b*sqrt(d)``, and uncertain decimals); sums and
products of quadratics over different radicands stay exact as linear
combinations of square roots.  Everything else (division by such sums,
square roots, real powers, logarithms) becomes a lazily refined enclosure.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from mpmath import libmp

from .errors import BudgetExceeded, NumericsError, UndecidableError

DEFAULT_BUDGET = 256
_START_PRECISION = 32

Number = int | Fraction


class LiteralError(NumericsError, ValueError):
    code = "invalid-literal"


class Ordering(str, Enum):
    LESS = "less"
    EQUAL = "equal"
    GREATER = "greater"
    UNDECIDABLE = "undecidable"


class Verdict(str, Enum):
    TRUE = "true"
    FALSE = "false"
    UNDECIDABLE = "undecidable"

    @classmethod
    def of(cls, flag: bool) -> "Verdict":
        return cls.TRUE if flag else cls.FALSE


# ---------------------------------------------------------------------------
# rational intervals


def _floor_div_pow2(num: int, shift: int) -> int:
    return num >> shift if shift >= 0 else num << -shift


def _dyadic_floor(x: Fraction, bits: int) -> Fraction:
    return Fraction(math.floor(x * (1 << bits)), 1 << bits)


def _dyadic_ceil(x: Fraction, bits: int) -> Fraction:
    return Fraction(math.ceil(x * (1 << bits)), 1 << bits)


@dataclass(frozen=True)
class RatInterval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x: Number) -> "RatInterval":
        x = Fraction(x)
        return cls(x, x)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, other: "RatInterval | Number") -> bool:
        if isinstance(other, RatInterval):
            return self.lo <= other.lo and other.hi <= self.hi
        return self.lo <= other <= self.hi

    def __add__(self, other: "RatInterval | Number") -> "RatInterval":
        o = _as_interval(other)
        return RatInterval(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __neg__(self) -> "RatInterval":
        return RatInterval(-self.hi, -self.lo)

    def __sub__(self, other: "RatInterval | Number") -> "RatInterval":
        return self + (-_as_interval(other))

    def __rsub__(self, other: Number) -> "RatInterval":
        return _as_interval(other) - self

    def __mul__(self, other: "RatInterval | Number") -> "RatInterval":
        o = _as_interval(other)
        products = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return RatInterval(min(products), max(products))

    __rmul__ = __mul__

    def __abs__(self) -> "RatInterval":
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return RatInterval(Fraction(0), max(-self.lo, self.hi))

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def reciprocal(self) -> "RatInterval":
        if self.contains_zero():
            raise ZeroDivisionError("interval contains zero")
        return RatInterval(1 / self.hi, 1 / self.lo)

    def maximum(self, other: "RatInterval") -> "RatInterval":
        return RatInterval(max(self.lo, other.lo), max(self.hi, other.hi))

    def minimum(self, other: "RatInterval") -> "RatInterval":
        return RatInterval(min(self.lo, other.lo), min(self.hi, other.hi))

    def rounded(self, bits: int) -> "RatInterval":
        """Outward rounding to dyadic endpoints, keeps Fractions small."""
        return RatInterval(_dyadic_floor(self.lo, bits), _dyadic_ceil(self.hi, bits))

    def intersect(self, other: "RatInterval") -> "RatInterval":
        return RatInterval(max(self.lo, other.lo), min(self.hi, other.hi))


def _as_interval(x: "RatInterval | Number") -> RatInterval:
    return x if isinstance(x, RatInterval) else RatInterval.point(x)


def interval_compare(a: RatInterval, b: RatInterval) -> Ordering:
    """Ordering if the intervals separate (or are the same point)."""
    if a.hi < b.lo:
        return Ordering.LESS
    if a.lo > b.hi:
        return Ordering.GREATER
    if a.lo == a.hi == b.lo == b.hi:
        return Ordering.EQUAL
    return Ordering.UNDECIDABLE


def _sqrt_floor_fraction(x: Fraction, bits: int) -> Fraction:
    # floor(sqrt(x) * 2**bits) / 2**bits
    return Fraction(math.isqrt((x.numerator << (2 * bits)) // x.denominator), 1 << bits)


def interval_sqrt(x: RatInterval, bits: int) -> RatInterval:
    if x.lo < 0:
        if x.hi < 0:
            raise ValueError("sqrt of a negative interval")
        x = RatInterval(Fraction(0), x.hi)
    lo = _sqrt_floor_fraction(x.lo, bits)
    hi = _sqrt_floor_fraction(x.hi, bits) + Fraction(1, 1 << bits)
    return RatInterval(lo, hi)


# mpmath's low-level functions take explicit rounding modes, which gives
# directed enclosures of log/exp without touching global precision state.


def _to_mpf(x: Fraction, prec: int, rnd: str):
    return libmp.from_rational(x.numerator, x.denominator, prec, rnd)


def _from_mpf(v) -> Fraction:
    man, exp = libmp.to_man_exp(v)
    man = -int(man) if v[0] else int(man)
    return Fraction(man * (1 << exp)) if exp >= 0 else Fraction(man, 1 << -exp)


def _widened(lo_v, hi_v, prec: int) -> RatInterval:
    # mpmath's directed rounding of transcendental functions is faithful only
    # to within an ulp or so; pad by a few ulps to keep the enclosure sound
    lo, hi = _from_mpf(lo_v), _from_mpf(hi_v)
    pad_lo = abs(lo) / (1 << max(prec - 3, 1)) + Fraction(1, 1 << (2 * prec))
    pad_hi = abs(hi) / (1 << max(prec - 3, 1)) + Fraction(1, 1 << (2 * prec))
    return RatInterval(lo - pad_lo, hi + pad_hi)


def interval_log(x: RatInterval, prec: int) -> RatInterval:
    if x.lo <= 0:
        raise ValueError("log of a non-positive interval")
    if x.lo == x.hi == 1:
        return RatInterval.point(0)
    lo = libmp.mpf_log(_to_mpf(x.lo, prec, libmp.round_floor), prec, libmp.round_floor)
    hi = libmp.mpf_log(_to_mpf(x.hi, prec, libmp.round_ceiling), prec, libmp.round_ceiling)
    return _widened(lo, hi, prec)


def interval_exp(x: RatInterval, prec: int) -> RatInterval:
    lo = libmp.mpf_exp(_to_mpf(x.lo, prec, libmp.round_floor), prec, libmp.round_floor)
    hi = libmp.mpf_exp(_to_mpf(x.hi, prec, libmp.round_ceiling), prec, libmp.round_ceiling)
    iv = _widened(lo, hi, prec)
    return RatInterval(max(iv.lo, Fraction(0)), iv.hi)


def interval_pow(x: RatInterval, exponent: Fraction, prec: int) -> RatInterval:
    """x**exponent for x > 0 (or x >= 0 with exponent > 0)."""
    if exponent.denominator == 1 and exponent >= 0:
        e = int(exponent)
        return RatInterval(x.lo**e, x.hi**e) if x.lo >= 0 else _int_power(x, e)
    if x.lo <= 0:
        if exponent > 0 and x.lo == 0:
            upper = interval_pow(RatInterval(x.hi, x.hi), exponent, prec) if x.hi > 0 else RatInterval.point(0)
            return RatInterval(Fraction(0), upper.hi)
        raise ValueError("real power of a non-positive interval")
    logs = interval_log(x, prec) * exponent
    return interval_exp(logs.rounded(prec), prec)


def _int_power(x: RatInterval, e: int) -> RatInterval:
    result = RatInterval.point(1)
    for _ in range(e):
        result = result * x
    return result


# ---------------------------------------------------------------------------
# square-free bookkeeping for exact surds

_SQUAREFREE_LIMIT = 10**24


def squarefree_split(n: int) -> tuple[int, int]:
    """Return (f, d) with n = f*f*d and d square-free.

    Trial division up to the cube root leaves a cofactor with at most two
    prime factors, which is a square exactly when isqrt says so.
    """
    if n <= 0:
        raise ValueError("squarefree_split needs a positive integer")
    f, d = 1, 1
    m = n
    p = 2
    while p * p * p <= m:
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            f *= p ** (e // 2)
            if e % 2:
                d *= p
        p += 1 if p == 2 else 2
    s = math.isqrt(m)
    if s * s == m:
        f *= s
    else:
        d *= m
    return f, d


def _radical_product(d1: int, d2: int) -> tuple[int, int]:
    g = math.gcd(d1, d2)
    return g, (d1 // g) * (d2 // g)


# ---------------------------------------------------------------------------
# the Real hierarchy


class Real:
    """A computable real number given by its enclosure oracle."""

    kind: str = "abstract"

    def _raw_enclose(self, precision: int) -> RatInterval:
        raise NotImplementedError

    def max_precision(self) -> int | None:
        """Largest precision this value can be refined to (None = unbounded)."""
        return None

    def enclose(self, precision: int, budget: int | None = None) -> RatInterval:
        return enclose(self, precision, budget)

    # arithmetic -------------------------------------------------------------
    def __add__(self, other: "Real | Number") -> "Real":
        return add(self, other)

    def __radd__(self, other: Number) -> "Real":
        return add(other, self)

    def __sub__(self, other: "Real | Number") -> "Real":
        return add(self, negate(as_real(other)))

    def __rsub__(self, other: Number) -> "Real":
        return add(other, negate(self))

    def __mul__(self, other: "Real | Number") -> "Real":
        return multiply(self, other)

    def __rmul__(self, other: Number) -> "Real":
        return multiply(other, self)

    def __truediv__(self, other: "Real | Number") -> "Real":
        return divide(self, other)

    def __rtruediv__(self, other: Number) -> "Real":
        return divide(other, self)

    def __neg__(self) -> "Real":
        return negate(self)

    def __abs__(self) -> "Real":
        return absolute(self)

    def __float__(self) -> float:
        return to_float(self)

    @property
    def is_exact(self) -> bool:
        return False

    def to_literal(self) -> str:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"Real({self.to_literal()})"


@dataclass(frozen=True, eq=False, repr=False)
class ExactReal(Real):
    """Finite sum c_1 + sum_d b_d*sqrt(d) with d square-free; zero iff all terms vanish."""

    terms: tuple[tuple[int, Fraction], ...]
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def kind(self) -> str:  # type: ignore[override]
        radicals = [d for d, _ in self.terms if d != 1]
        if not radicals:
            return "rational"
        return "quadratic" if len(radicals) == 1 else "surd"

    @property
    def is_exact(self) -> bool:
        return True

    @property
    def rational_part(self) -> Fraction:
        for d, c in self.terms:
            if d == 1:
                return c
        return Fraction(0)

    @property
    def radical_terms(self) -> list[tuple[int, Fraction]]:
        return [(d, c) for d, c in self.terms if d != 1]

    def is_zero(self) -> bool:
        return not self.terms

    def as_fraction(self) -> Fraction:
        if self.kind != "rational":
            raise TypeError("not a rational value")
        return self.rational_part

    def __eq__(self, other: object) -> bool:
        if isinstance(other, ExactReal):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.terms == _exact_terms_of(Fraction(other))
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.terms)

    def _raw_enclose(self, precision: int) -> RatInterval:
        cached = self._cache.get(precision)
        if cached is not None:
            return cached
        lo = hi = self.rational_part
        radicals = self.radical_terms
        if radicals:
            spread = max(1, len(radicals)).bit_length()
            for d, c in radicals:
                bits = precision + spread + max(0, abs(c).numerator.bit_length() - abs(c).denominator.bit_length() + 1)
                s = math.isqrt(d << (2 * bits))
                root = RatInterval(Fraction(s, 1 << bits), Fraction(s + 1, 1 << bits))
                term = root * c
                lo += term.lo
                hi += term.hi
        result = RatInterval(lo, hi)
        if len(self._cache) < 64:
            self._cache[precision] = result
        return result

    def to_literal(self) -> str:
        if not self.terms:
            return "0"
        parts: list[str] = []
        for d, c in self.terms:
            mag = _fraction_text(abs(c))
            if d == 1:
                body = mag
            else:
                body = f"sqrt({d})" if mag == "1" else f"{mag}*sqrt({d})"
            sign = "-" if c < 0 else "+"
            parts.append(("-" if c < 0 else "") + body if not parts else f"{sign}{body}")
        return "".join(parts)

    def exact_sign(self) -> int | None:
        """Sign without enclosures when at most one radical is present."""
        if not self.terms:
            return 0
        radicals = self.radical_terms
        a = self.rational_part
        if not radicals:
            return (a > 0) - (a < 0)
        if len(radicals) > 1:
            return None
        d, b = radicals[0]
        sb = 1 if b > 0 else -1
        if a == 0 or (a > 0) == (b > 0):
            return sb
        # opposite signs: a^2 == b^2 d is impossible for square-free d > 1
        if a * a > b * b * d:
            return 1 if a > 0 else -1
        return sb


@dataclass(frozen=True, eq=False, repr=False)
class DecimalReal(Real):
    """A measured value: centre with a declared uncertainty radius."""

    center: Fraction
    radius: Fraction
    text: str = ""

    kind = "decimal"

    def max_precision(self) -> int | None:
        # largest p with 2*radius <= 2**-p
        width = 2 * self.radius
        p = 0
        while Fraction(1, 1 << (p + 1)) >= width:
            p += 1
        return p

    def _raw_enclose(self, precision: int) -> RatInterval:
        return RatInterval(self.center - self.radius, self.center + self.radius)

    def to_literal(self) -> str:
        if self.text:
            return self.text
        return f"{_fraction_text(self.center)}~{_fraction_text(self.radius)}"


@dataclass(frozen=True, eq=False, repr=False)
class LazyReal(Real):
    """Value defined by an interval routine over child enclosures.

    ``compute(work)`` returns an enclosure built from children evaluated at
    working precision ``work``; :func:`enclose` raises ``work`` until the
    requested width is reached.
    """

    compute: Callable[[int], RatInterval]
    children: tuple[Real, ...]
    label: "str | Callable[[], str]"
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    kind = "expr"

    def max_precision(self) -> int | None:
        caps = [c.max_precision() for c in self.children]
        finite = [c for c in caps if c is not None]
        return min(finite) if finite else None

    def _raw_enclose(self, precision: int) -> RatInterval:
        cached = self._cache.get(precision)
        if cached is not None:
            return cached
        target = Fraction(1, 1 << precision)
        cap = self.max_precision()
        guard = 8
        last: RatInterval | None = None
        limit = max(4 * precision, precision + 1024)
        while True:
            work = precision + guard
            try:
                iv = self.compute(work)
            except ZeroDivisionError:
                iv = None
            if iv is not None:
                last = iv
                if iv.width <= target:
                    if len(self._cache) < 32:
                        self._cache[precision] = iv
                    return iv
            if (cap is not None and work > cap + 64) or work > limit:
                if last is not None and cap is not None:
                    return last
                raise BudgetExceeded(f"cannot refine {self.to_literal()} to {precision} bits")
            guard *= 2

    def to_literal(self) -> str:
        return self.label() if callable(self.label) else self.label


def _child_enclose(x: Real, work: int) -> RatInterval:
    cap = x.max_precision()
    return x._raw_enclose(work if cap is None else min(work, cap))


def _fraction_text(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _exact_terms_of(x: Fraction) -> tuple[tuple[int, Fraction], ...]:
    return ((1, x),) if x != 0 else ()


# constructors -----------------------------------------------------------------


def rational(p: Number, q: Number = 1) -> ExactReal:
    return ExactReal(_exact_terms_of(Fraction(p) / Fraction(q)))


def quadratic(a: Number, b: Number, d: int) -> ExactReal:
    """a + b*sqrt(d); d is reduced to its square-free part."""
    if d < 0:
        raise ValueError("radicand must be non-negative")
    if d == 0:
        return rational(a)
    f, core = squarefree_split(d)
    return _from_dict({1: Fraction(a), core: Fraction(b) * f})


def decimal(value: Number | str, radius: Number | str, text: str = "") -> Real:
    center = Fraction(value)
    rad = Fraction(radius)
    if rad < 0:
        raise ValueError("uncertainty radius must be non-negative")
    if rad == 0:
        return rational(center)
    return DecimalReal(center, rad, text)


def _from_dict(coeffs: dict[int, Fraction]) -> ExactReal:
    return ExactReal(tuple(sorted((d, c) for d, c in coeffs.items() if c != 0)))


def as_real(x: "Real | Number") -> Real:
    if isinstance(x, Real):
        return x
    if isinstance(x, (int, Fraction)):
        return rational(x)
    raise TypeError(f"cannot interpret {x!r} as a Real")


# arithmetic -------------------------------------------------------------------


def add(x: "Real | Number", y: "Real | Number") -> Real:
    x, y = as_real(x), as_real(y)
    if isinstance(x, ExactReal) and isinstance(y, ExactReal):
        coeffs: dict[int, Fraction] = dict(x.terms)
        for d, c in y.terms:
            coeffs[d] = coeffs.get(d, Fraction(0)) + c
        return _from_dict(coeffs)
    if isinstance(x, DecimalReal) and isinstance(y, ExactReal) and y.kind == "rational":
        return DecimalReal(x.center + y.rational_part, x.radius)
    if isinstance(y, DecimalReal) and isinstance(x, ExactReal) and x.kind == "rational":
        return DecimalReal(y.center + x.rational_part, y.radius)
    return LazyReal(
        lambda w: _child_enclose(x, w) + _child_enclose(y, w),
        (x, y),
        lambda: f"({x.to_literal()})+({y.to_literal()})",
    )


def negate(x: Real) -> Real:
    if isinstance(x, ExactReal):
        return ExactReal(tuple((d, -c) for d, c in x.terms))
    if isinstance(x, DecimalReal):
        return DecimalReal(-x.center, x.radius)
    return LazyReal(lambda w: -_child_enclose(x, w), (x,), lambda: f"-({x.to_literal()})")


def multiply(x: "Real | Number", y: "Real | Number") -> Real:
    x, y = as_real(x), as_real(y)
    if isinstance(x, ExactReal) and isinstance(y, ExactReal):
        coeffs: dict[int, Fraction] = {}
        for d1, c1 in x.terms:
            for d2, c2 in y.terms:
                g, d = _radical_product(d1, d2)
                coeffs[d] = coeffs.get(d, Fraction(0)) + c1 * c2 * g
        return _from_dict(coeffs)
    for a, b in ((x, y), (y, x)):
        if isinstance(a, DecimalReal) and isinstance(b, ExactReal) and b.kind == "rational":
            t = b.rational_part
            return DecimalReal(a.center * t, a.radius * abs(t)) if t != 0 else rational(0)
    return LazyReal(
        lambda w: (_child_enclose(x, w) * _child_enclose(y, w)).rounded(w + 8),
        (x, y),
        lambda: f"({x.to_literal()})*({y.to_literal()})",
    )


def divide(x: "Real | Number", y: "Real | Number") -> Real:
    x, y = as_real(x), as_real(y)
    if isinstance(y, ExactReal):
        if y.is_zero():
            raise ZeroDivisionError("division by exact zero")
        if y.kind == "rational":
            return multiply(x, rational(1 / y.rational_part))
        if y.kind == "quadratic" and isinstance(x, ExactReal):
            (d, b), a = y.radical_terms[0], y.rational_part
            conj = _from_dict({1: a, d: -b})
            norm = a * a - b * b * d
            return multiply(multiply(x, conj), rational(1 / norm))
    return LazyReal(
        lambda w: (_child_enclose(x, w) * _child_enclose(y, w).reciprocal()).rounded(w + 8),
        (x, y),
        lambda: f"({x.to_literal()})/({y.to_literal()})",
    )


def absolute(x: Real) -> Real:
    if isinstance(x, ExactReal):
        s = x.exact_sign()
        if s is None:
            s = sign(x)
        return negate(x) if s < 0 else x
    return LazyReal(lambda w: abs(_child_enclose(x, w)), (x,), lambda: f"|{x.to_literal()}|")


def sqrt(x: "Real | Number") -> Real:
    x = as_real(x)
    if isinstance(x, ExactReal) and x.kind == "rational":
        v = x.rational_part
        if v < 0:
            raise ValueError("sqrt of a negative number")
        n = v.numerator * v.denominator
        if n == 0:
            return rational(0)
        r = math.isqrt(n)
        if r * r == n:
            return rational(Fraction(r, v.denominator))
        if n <= _SQUAREFREE_LIMIT:
            f, d = squarefree_split(n)
            return _from_dict({d: Fraction(f, v.denominator)})
    return LazyReal(lambda w: interval_sqrt(_child_enclose(x, 2 * w + 4), w + 2), (x,), lambda: f"sqrt({x.to_literal()})")


def real_max(x: "Real | Number", y: "Real | Number", budget: int = DEFAULT_BUDGET) -> Real:
    x, y = as_real(x), as_real(y)
    order = compare(x, y, budget)
    if order in (Ordering.GREATER, Ordering.EQUAL):
        return x
    if order is Ordering.LESS:
        return y
    return LazyReal(lambda w: _child_enclose(x, w).maximum(_child_enclose(y, w)), (x, y), "max")


def real_pow(x: "Real | Number", exponent: Number) -> Real:
    x = as_real(x)
    e = Fraction(exponent)
    if e.denominator == 1 and e >= 0:
        result: Real = rational(1)
        for _ in range(int(e)):
            result = result * x
        return result
    return LazyReal(
        lambda w: interval_pow(_child_enclose(x, w + 16), e, w + 16).rounded(w + 8),
        (x,),
        lambda: f"({x.to_literal()})^({_fraction_text(e)})",
    )


def real_log(x: "Real | Number") -> Real:
    x = as_real(x)
    return LazyReal(lambda w: interval_log(_child_enclose(x, w + 16), w + 16).rounded(w + 8), (x,), lambda: f"log({x.to_literal()})")


# enclosure and comparison -----------------------------------------------------


def enclose(x: "Real | Number", precision: int, budget: int | None = DEFAULT_BUDGET) -> RatInterval:
    """Rational interval of width <= 2**-precision containing ``x``."""
    x = as_real(x)
    if precision < 0:
        raise ValueError("precision must be non-negative")
    if budget is not None and precision > budget:
        raise BudgetExceeded(f"precision {precision} exceeds budget {budget}")
    cap = x.max_precision()
    if cap is not None and precision > cap:
        raise BudgetExceeded(f"{x.to_literal()} cannot be refined beyond {cap} bits")
    iv = x._raw_enclose(precision)
    if iv.width > Fraction(1, 1 << precision):
        raise BudgetExceeded(f"{x.to_literal()} cannot be refined to {precision} bits")
    return iv


def _precision_ladder(budget: int) -> Iterable[int]:
    p = min(_START_PRECISION, budget)
    while True:
        yield p
        if p >= budget:
            return
        p = min(2 * p, budget)


def compare(x: "Real | Number", y: "Real | Number", budget: int = DEFAULT_BUDGET) -> Ordering:
    """Certified ordering of x and y, or UNDECIDABLE when the budget runs out."""
    x, y = as_real(x), as_real(y)
    if isinstance(x, ExactReal) and isinstance(y, ExactReal):
        diff = add(x, negate(y))
        assert isinstance(diff, ExactReal)
        if diff.is_zero():
            return Ordering.EQUAL
        return _sign_by_enclosure(diff, budget)
    return _separate(x, y, budget)


def _sign_by_enclosure(x: Real, budget: int) -> Ordering:
    return _separate(x, rational(0), budget)


def _separate(x: Real, y: Real, budget: int) -> Ordering:
    for p in _precision_ladder(budget):
        try:
            a = x._raw_enclose(_capped(x, p))
            b = y._raw_enclose(_capped(y, p))
        except (BudgetExceeded, ZeroDivisionError):
            return Ordering.UNDECIDABLE
        if a.hi < b.lo:
            return Ordering.LESS
        if a.lo > b.hi:
            return Ordering.GREATER
        if _both_capped(x, y, p):
            break
    return Ordering.UNDECIDABLE


def _capped(x: Real, p: int) -> int:
    cap = x.max_precision()
    return p if cap is None else min(p, cap)


def _both_capped(x: Real, y: Real, p: int) -> bool:
    cx, cy = x.max_precision(), y.max_precision()
    return (cx is not None and cx < p) and (cy is not None and cy < p) or (
        (cx is not None and cx < p and y.is_exact and y.kind == "rational")
        or (cy is not None and cy < p and x.is_exact and x.kind == "rational")
    )


def sign(x: "Real | Number", budget: int = DEFAULT_BUDGET) -> int:
    """Sign of x; raises UndecidableError if it cannot be certified."""
    x = as_real(x)
    if isinstance(x, ExactReal):
        s = x.exact_sign()
        if s is not None:
            return s
        if x.is_zero():
            return 0
    order = compare(x, rational(0), budget)
    if order is Ordering.UNDECIDABLE:
        raise UndecidableError(f"sign of {x.to_literal()} undecidable at {budget} bits")
    return {Ordering.LESS: -1, Ordering.EQUAL: 0, Ordering.GREATER: 1}[order]


def require(order: Ordering, what: str = "comparison") -> Ordering:
    if order is Ordering.UNDECIDABLE:
        raise UndecidableError(f"{what} undecidable at budget")
    return order


def less(x: "Real | Number", y: "Real | Number", budget: int = DEFAULT_BUDGET) -> bool:
    """Certified x < y; raises when undecidable."""
    return require(compare(x, y, budget), "strict inequality") is Ordering.LESS


def less_equal(x: "Real | Number", y: "Real | Number", budget: int = DEFAULT_BUDGET) -> bool:
    return require(compare(x, y, budget), "inequality") in (Ordering.LESS, Ordering.EQUAL)


def floor_real(x: "Real | Number", budget: int = DEFAULT_BUDGET) -> int:
    x = as_real(x)
    if isinstance(x, ExactReal) and x.kind == "rational":
        return math.floor(x.rational_part)
    for p in _precision_ladder(budget):
        try:
            iv = x._raw_enclose(_capped(x, p))
        except (BudgetExceeded, ZeroDivisionError):
            break
        lo, hi = math.floor(iv.lo), math.floor(iv.hi)
        if lo == hi:
            return lo
        cap = x.max_precision()
        if cap is not None and cap < p:
            break
    if isinstance(x, ExactReal):
        # an exact non-rational surd is never an integer; one more push
        iv = x._raw_enclose(4 * budget)
        if math.floor(iv.lo) == math.floor(iv.hi):
            return math.floor(iv.lo)
    raise UndecidableError(f"floor of {x.to_literal()} undecidable")


def ceil_real(x: "Real | Number", budget: int = DEFAULT_BUDGET) -> int:
    return -floor_real(negate(as_real(x)), budget)


def round_real(x: "Real | Number", budget: int = DEFAULT_BUDGET) -> int:
    """Nearest integer; exact half-integers round down (lexicographic tie-break)."""
    return ceil_real(as_real(x) - Fraction(1, 2), budget)


def to_float(x: "Real | Number") -> float:
    x = as_real(x)
    cap = x.max_precision()
    return float(x._raw_enclose(60 if cap is None else min(60, cap)).mid)


# ---------------------------------------------------------------------------
# literal grammar

_NUM = r"\d+(?:/\d+)?"
_TERM_RE = re.compile(
    rf"\s*([+-])?\s*(?:({_NUM})\s*\*\s*sqrt\(\s*(\d+)\s*\)|sqrt\(\s*(\d+)\s*\)|({_NUM}))\s*"
)
_DECIMAL_RE = re.compile(
    r"^\s*([+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?|[+-]?\d+/\d+)\s*~\s*((?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)\s*$"
)


def parse_real(text: str) -> Real:
    """Parse ``p/q``, ``a+b*sqrt(d)`` (any sum of such terms) or ``value~radius``."""
    if not isinstance(text, str) or not text.strip():
        raise LiteralError(f"empty real literal: {text!r}")
    m = _DECIMAL_RE.match(text)
    if m:
        return decimal(Fraction(m.group(1)), Fraction(m.group(2)), text.strip())
    coeffs: dict[int, Fraction] = {}
    pos = 0
    s = text.strip()
    first = True
    while pos < len(s):
        t = _TERM_RE.match(s, pos)
        if not t or t.end() == pos:
            raise LiteralError(f"cannot parse real literal {text!r} near position {pos}")
        sgn, coef, rad1, rad2, plain = t.groups()
        if sgn is None and not first:
            raise LiteralError(f"missing operator in {text!r}")
        factor = -1 if sgn == "-" else 1
        if plain is not None:
            d, c = 1, Fraction(plain)
        else:
            c = Fraction(coef) if coef is not None else Fraction(1)
            radicand = int(rad1 if rad1 is not None else rad2)
            if radicand == 0:
                d, c = 1, Fraction(0)
            else:
                f, d = squarefree_split(radicand)
                c *= f
        coeffs[d] = coeffs.get(d, Fraction(0)) + factor * c
        pos = t.end()
        first = False
    return _from_dict(coeffs)


def format_real(x: Real) -> str:
    return x.to_literal()


def parse_pair(text: str) -> tuple[Real, Real]:
    parts = [p for p in text.split(",")]
    if len(parts) != 2:
        raise LiteralError(f"expected two comma-separated literals, got {text!r}")
    return parse_real(parts[0]), parse_real(parts[1])


# ---------------------------------------------------------------------------
# norms


@dataclass(frozen=True)
class Norm:
    """A norm on R^2 with constant C' relating it to the sup norm both ways."""

    id: str
    equiv_upper: Fraction
    evaluator: Callable[[Fraction, Fraction], Real] | None = None
    name: str = ""

    def label(self) -> str:
        return self.name or self.id


SUP = Norm("sup", Fraction(1))
L1 = Norm("l1", Fraction(2))
L2 = Norm("l2", Fraction(2))

NORMS = {"sup": SUP, "l1": L1, "l2": L2}


def get_norm(name: str) -> Norm:
    try:
        return NORMS[name]
    except KeyError:
        raise ValueError(f"unknown norm {name!r}; expected one of {sorted(NORMS)}") from None


def norm_eval(n: Norm, v: Sequence[Number]) -> Real:
    x, y = Fraction(v[0]), Fraction(v[1])
    if n.id == "sup":
        return rational(max(abs(x), abs(y)))
    if n.id == "l1":
        return rational(abs(x) + abs(y))
    if n.id == "l2":
        return sqrt(x * x + y * y)
    if n.evaluator is None:
        raise ValueError("custom norm without evaluator")
    return as_real(n.evaluator(x, y))


def norm_of_reals(n: Norm, e1: Real, e2: Real, budget: int = DEFAULT_BUDGET) -> Real:
    """Norm of a vector with Real coordinates (exact whenever possible)."""
    if n.id == "sup":
        return real_max(absolute(e1), absolute(e2), budget)
    if n.id == "l1":
        return absolute(e1) + absolute(e2)
    if n.id == "l2":
        return sqrt(e1 * e1 + e2 * e2)
    if all(isinstance(e, ExactReal) and e.kind == "rational" for e in (e1, e2)):
        return norm_eval(n, (e1.rational_part, e2.rational_part))  # type: ignore[union-attr]
    return _lipschitz_norm(n, e1, e2)


def _lipschitz_norm(n: Norm, e1: Real, e2: Real) -> Real:
    # |N(a) - N(b)| <= C' * sup|a - b| for a norm with sup-equivalence constant C'
    def compute(work: int) -> RatInterval:
        a, b = _child_enclose(e1, work), _child_enclose(e2, work)
        centre = enclose(norm_eval(n, (a.mid, b.mid)), work, budget=None)
        slack = n.equiv_upper * max(a.width, b.width) / 2
        return RatInterval(centre.lo - slack, centre.hi + slack)

    return LazyReal(compute, (e1, e2), f"{n.label()}-norm")


def norm_key(n: Norm, e1: Real, e2: Real, budget: int = DEFAULT_BUDGET) -> Real:
    """A strictly monotone image of the norm that stays exact for sup/l1/l2."""
    if n.id == "l2":
        return e1 * e1 + e2 * e2
    return norm_of_reals(n, e1, e2, budget)


def custom_norm(
    evaluator: Callable[[Fraction, Fraction], Real | Number],
    equiv_upper: Number,
    name: str = "custom",
    samples: int = 200,
    seed: int = 0,
) -> Norm:
    """Build and validate a user norm; raises ValueError on a certified violation."""
    norm = Norm("custom", Fraction(equiv_upper), lambda x, y: as_real(evaluator(x, y)), name)
    problems = validate_norm(norm, samples=samples, seed=seed)
    if problems:
        raise ValueError(f"norm {name!r} rejected: {problems[0]}")
    return norm


def validate_norm(n: Norm, samples: int = 200, seed: int = 0, budget: int = 64) -> list[str]:
    """Sampled checks of homogeneity, triangle inequality and C'-equivalence."""
    rng = random.Random(seed)
    problems: list[str] = []

    def rand_vec() -> tuple[Fraction, Fraction]:
        return (Fraction(rng.randint(-50, 50), rng.randint(1, 9)), Fraction(rng.randint(-50, 50), rng.randint(1, 9)))

    c = n.equiv_upper
    for _ in range(samples):
        v, w = rand_vec(), rand_vec()
        t = Fraction(rng.randint(-20, 20), rng.randint(1, 7))
        nv = norm_eval(n, v)
        sup_v = max(abs(v[0]), abs(v[1]))
        scaled = norm_eval(n, (t * v[0], t * v[1]))
        if _separate(scaled, abs(t) * nv, budget) is not Ordering.UNDECIDABLE and compare(scaled, abs(t) * nv, budget) is not Ordering.EQUAL:
            problems.append(f"homogeneity fails at v={v}, t={t}")
        total = norm_eval(n, (v[0] + w[0], v[1] + w[1]))
        if compare(total, nv + norm_eval(n, w), budget) is Ordering.GREATER:
            problems.append(f"triangle inequality fails at v={v}, w={w}")
        if compare(nv, c * sup_v, budget) is Ordering.GREATER:
            problems.append(f"||v|| > C'||v||_sup at v={v}")
        if compare(rational(sup_v), c * nv, budget) is Ordering.GREATER:
            problems.append(f"||v||_sup > C'||v|| at v={v}")
    return problems


def fraction_to_str(x: Fraction) -> str:
    return _fraction_text(x)


def interval_to_json(iv: RatInterval) -> dict[str, str]:
    return {"lo": _fraction_text(iv.lo), "hi": _fraction_text(iv.hi)}
