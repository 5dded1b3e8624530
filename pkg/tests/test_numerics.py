from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slitflow.errors import BudgetExceeded
from slitflow.numerics import (
    L1,
    L2,
    SUP,
    Ordering,
    RatInterval,
    Verdict,
    compare,
    custom_norm,
    decimal,
    enclose,
    floor_real,
    format_real,
    interval_exp,
    interval_log,
    norm_eval,
    parse_real,
    quadratic,
    rational,
    real_log,
    real_pow,
    sqrt,
    squarefree_split,
    to_float,
)

from . import oracles

fractions = st.fractions(min_value=-50, max_value=50, max_denominator=60)
radicands = st.sampled_from([2, 3, 5, 6, 7, 10, 11, 13])


def test_enclose_sqrt2_width_and_membership():
    iv = enclose(quadratic(0, 1, 2), 20)
    assert iv.width <= Fraction(1, 2**20)
    assert iv.lo * iv.lo <= 2 <= iv.hi * iv.hi


def test_compare_sqrt2_against_decimal_truncation():
    assert compare(quadratic(0, 1, 2), Fraction(141421, 100000), 60) is Ordering.GREATER


def test_exact_equality_is_decided_without_enclosures():
    a = quadratic(1, 1, 8)  # 1 + 2 sqrt(2)
    b = parse_real("1+2*sqrt(2)")
    assert compare(a, b) is Ordering.EQUAL


def test_decimal_literal_hits_budget_floor():
    x = parse_real("0.123456~1e-9")
    assert compare(x, Fraction(123456, 10**6)) is Ordering.UNDECIDABLE
    assert compare(x, Fraction(1, 8)) is Ordering.LESS
    with pytest.raises(BudgetExceeded):
        enclose(x, 64)


def test_budget_is_enforced():
    with pytest.raises(BudgetExceeded):
        enclose(quadratic(0, 1, 2), 300, budget=256)


def test_squarefree_split():
    assert squarefree_split(72) == (6, 2)
    assert squarefree_split(1) == (1, 1)
    assert squarefree_split(49) == (7, 1)


@pytest.mark.parametrize(
    "text",
    ["3/7", "-1+sqrt(2)", "1/3+1/5*sqrt(2)", "2*sqrt(3)-sqrt(5)", "0.5~1e-6", "sqrt(8)"],
)
def test_literal_round_trip(text):
    x = parse_real(text)
    y = parse_real(format_real(x))
    assert format_real(y) == format_real(x)


@given(fractions, fractions, radicands)
def test_literal_round_trip_property(a, b, d):
    x = quadratic(a, b, d)
    assert compare(parse_real(format_real(x)), x) is Ordering.EQUAL


@settings(max_examples=60)
@given(fractions, fractions, radicands, st.integers(8, 200))
def test_enclosure_contains_oracle_value(a, b, d, prec):
    x = quadratic(a, b, d)
    iv = enclose(x, prec)
    v = oracles.value(a, b, d)
    with mpmath.workdps(oracles.DPS):
        assert mpmath.mpf(iv.lo.numerator) / iv.lo.denominator <= v <= mpmath.mpf(iv.hi.numerator) / iv.hi.denominator
    assert iv.width <= Fraction(1, 2**prec)


@settings(max_examples=60)
@given(fractions, fractions, fractions, fractions, radicands)
def test_compare_matches_oracle(a, b, c, e, d):
    x, y = quadratic(a, b, d), quadratic(c, e, d)
    got = compare(x, y)
    vx, vy = oracles.value(a, b, d), oracles.value(c, e, d)
    want = Ordering.EQUAL if vx == vy else (Ordering.LESS if vx < vy else Ordering.GREATER)
    assert got is want


@settings(max_examples=40)
@given(fractions, fractions, radicands)
def test_floor_matches_oracle(a, b, d):
    x = quadratic(a, b, d)
    assert floor_real(x) == int(mpmath.floor(oracles.value(a, b, d)))


@settings(max_examples=40)
@given(st.fractions(min_value=Fraction(1, 50), max_value=1000, max_denominator=50), st.integers(20, 120))
def test_log_and_exp_enclosures(x, prec):
    lo = interval_log(RatInterval.point(x), prec)
    with mpmath.workdps(60):
        true = mpmath.log(mpmath.mpf(x.numerator) / x.denominator)
        assert mpmath.mpf(lo.lo.numerator) / lo.lo.denominator <= true <= mpmath.mpf(lo.hi.numerator) / lo.hi.denominator
    ex = interval_exp(RatInterval.point(Fraction(x.numerator % 50, x.denominator)), prec)
    assert ex.lo <= ex.hi and ex.lo >= 0


def test_real_pow_and_log_against_float():
    assert abs(to_float(real_pow(quadratic(0, 1, 2), Fraction(3, 2))) - 2 ** 0.75) < 1e-12
    assert abs(to_float(real_log(rational(10))) - 2.302585092994046) < 1e-12
    assert compare(sqrt(rational(9)), rational(3)) is Ordering.EQUAL


def test_quadratic_division_is_exact():
    x = quadratic(1, 1, 2)
    assert compare((x / x), rational(1)) is Ordering.EQUAL


def test_norms():
    assert compare(norm_eval(SUP, (3, -4)), rational(4)) is Ordering.EQUAL
    assert compare(norm_eval(L1, (3, -4)), rational(7)) is Ordering.EQUAL
    assert compare(norm_eval(L2, (3, -4)), rational(5)) is Ordering.EQUAL


def test_custom_norm_rejects_non_norm():
    with pytest.raises(ValueError):
        custom_norm(lambda x, y: abs(x) * abs(x) + abs(y), 2, name="broken")
    ok = custom_norm(lambda x, y: 2 * abs(x) + abs(y), 3, name="weighted")
    assert compare(norm_eval(ok, (1, 1)), rational(3)) is Ordering.EQUAL


def test_verdict_of():
    assert Verdict.of(True) is Verdict.TRUE
    assert Verdict.of(False) is Verdict.FALSE


def test_decimal_constructor():
    x = decimal(Fraction(1, 2), Fraction(1, 10**6))
    assert compare(x, rational(0)) is Ordering.GREATER
