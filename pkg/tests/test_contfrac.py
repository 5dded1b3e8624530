from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slitflow.contfrac import (
    Convergent,
    alternation_signs,
    cf_expand,
    convergent_bounds_check,
    convergents,
    convergents_up_to,
    khinchin19_predicate,
    next_quotient_floor,
)
from slitflow.numerics import Verdict, parse_real, quadratic, rational

from . import oracles

GOLDEN = quadratic(Fraction(1, 2), Fraction(1, 2), 5)


def test_rational_expansion_terminates():
    exp = cf_expand(rational(Fraction(15, 4)), 5)
    assert exp.quotients == [3, 1, 3]
    assert exp.exact_termination
    assert [str(c) for c in exp.convergents] == ["3/1", "4/1", "15/4"]


def test_golden_convergents():
    assert [str(c) for c in convergents(GOLDEN, 5)] == ["1/1", "2/1", "3/2", "5/3", "8/5"]


def test_sqrt2_quotients():
    assert cf_expand(quadratic(0, 1, 2), 6).quotients == [1, 2, 2, 2, 2, 2]


def test_khinchin_predicate_examples():
    root2 = quadratic(0, 1, 2)
    assert khinchin19_predicate(root2, Fraction(7, 5)) is Verdict.TRUE
    # |sqrt2 - 3/2| = 0.0858 < 1/8, so 3/2 satisfies the predicate
    assert khinchin19_predicate(root2, Fraction(3, 2)) is Verdict.TRUE
    assert khinchin19_predicate(root2, Fraction(4, 3)) is Verdict.FALSE


def test_bounds_check_examples():
    rep = convergent_bounds_check(GOLDEN, 3)
    assert rep["convergent"] == "5/3" and rep["passed"]
    rep = convergent_bounds_check(quadratic(0, 1, 2), 1)
    assert rep["convergent"] == "3/2" and rep["passed"]
    assert rep["lower"] == "1/14" and rep["upper"] == "1/10"


def test_bounds_check_at_last_convergent_is_vacuous():
    rep = convergent_bounds_check(rational(Fraction(15, 4)), 2)
    assert rep["vacuous"] and rep["passed"]


def test_convergents_up_to():
    qs = [c.q for c in convergents_up_to(GOLDEN - 1, 100)]
    assert qs == [1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89]


def test_alternation():
    signs = alternation_signs(quadratic(0, 1, 2), convergents(quadratic(0, 1, 2), 6))
    assert signs == [1, -1, 1, -1, 1, -1]


def test_next_quotient_floor():
    root2 = quadratic(0, 1, 2)
    assert next_quotient_floor(root2, [1, 2, 2]) == 2


def test_convergent_must_be_reduced():
    with pytest.raises(ValueError):
        Convergent(2, 4)


quad = st.tuples(
    st.fractions(min_value=-20, max_value=20, max_denominator=30),
    st.fractions(min_value=Fraction(1, 30), max_value=20, max_denominator=30),
    st.sampled_from([2, 3, 5, 6, 7, 10, 11, 13, 14, 15]),
)


@settings(max_examples=80, deadline=None)
@given(quad)
def test_quotients_match_oracle(t):
    a, b, d = t
    got = cf_expand(quadratic(a, b, d), 15).quotients
    want = oracles.cf_quotients(oracles.value(a, b, d), 15)
    assert got == want


@settings(max_examples=40, deadline=None)
@given(quad)
def test_convergent_identities(t):
    a, b, d = t
    convs = convergents(quadratic(a, b, d), 12)
    for c0, c1 in zip(convs, convs[1:]):
        assert abs(c1.p * c0.q - c0.p * c1.q) == 1
        assert c1.q > c0.q or (c0.q == c1.q == 1)


def test_literal_input():
    assert cf_expand(parse_real("1+sqrt(2)"), 4).quotients == [2, 2, 2, 2]
