import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slitflow.bestapprox import (
    IteratedExp,
    best_approx_sequence,
    denominators,
    ell_n,
    is_best_approx,
    iterated_exp_sequence,
    lower_bound_report,
    nearest_affine_lines,
    next_denominator_bound,
    pm_analyze,
    pm_compare_norms,
    thm210_predicate,
)
from slitflow.contfrac import convergents_up_to
from slitflow.errors import UndecidableError
from slitflow.numerics import L1, L2, SUP, Verdict, parse_real, quadratic, rational

from . import oracles

X = (quadratic(-1, 1, 2), quadratic(-1, 1, 3))
GOLDEN_FRAC = quadratic(Fraction(-1, 2), Fraction(1, 2), 5)

# frozen from the mpmath brute-force oracle (tests/oracles.py)
L2_SEQUENCE = [(0, 1, 1), (1, 2, 3), (3, 5, 7), (8, 14, 19), (9, 16, 22), (14, 25, 34), (17, 30, 41)]
SUP_SEQUENCE = [(0, 1, 1), (1, 2, 3), (3, 5, 7), (9, 16, 22), (14, 25, 34), (17, 30, 41)]
SUP_LINES_50 = [(1, 1, -1), (1, -2, 1), (2, 3, -3), (5, 4, -5), (16, 21, -22), (21, 25, -27), (35, -28, 6)]


def _triples(seq):
    return [(b.p1, b.p2, b.q) for b in seq]


def test_one_dimensional_golden_reduction():
    seq = best_approx_sequence((GOLDEN_FRAC, rational(0)), SUP, 100)
    assert denominators(seq) == [1, 2, 3, 5, 8, 13, 21, 34, 55, 89]


def test_frozen_l2_sequence():
    assert _triples(best_approx_sequence(X, L2, 1000)) == L2_SEQUENCE


def test_frozen_sup_sequence():
    assert _triples(best_approx_sequence(X, SUP, 1000)) == SUP_SEQUENCE


def test_frozen_values_match_oracle():
    x1, x2 = oracles.value(Fraction(-1), Fraction(1), 2), oracles.value(Fraction(-1), Fraction(1), 3)
    assert oracles.best_approx(x1, x2, "l2", 1000) == L2_SEQUENCE
    assert oracles.best_approx(x1, x2, "sup", 1000) == SUP_SEQUENCE


@settings(max_examples=25, deadline=None)
@given(
    st.fractions(min_value=0, max_value=1, max_denominator=40),
    st.fractions(min_value=Fraction(1, 40), max_value=1, max_denominator=40),
    st.fractions(min_value=0, max_value=1, max_denominator=40),
    st.fractions(min_value=Fraction(1, 40), max_value=1, max_denominator=40),
    st.sampled_from(["sup", "l1", "l2"]),
)
def test_sequence_matches_oracle(a, b, c, e, norm_name):
    norm = {"sup": SUP, "l1": L1, "l2": L2}[norm_name]
    x = (quadratic(a, b, 2), quadratic(c, e, 3))
    got = _triples(best_approx_sequence(x, norm, 150))
    want = oracles.best_approx(oracles.value(a, b, 2), oracles.value(c, e, 3), norm_name, 150)
    assert got == want


def test_definition_checks():
    assert is_best_approx((rational(Fraction(1, 2)), rational(Fraction(1, 3))), SUP, 1, 0, 2) is Verdict.FALSE
    assert is_best_approx((GOLDEN_FRAC, rational(0)), SUP, 1, 0, 2) is Verdict.TRUE
    for p1, p2, q in SUP_SEQUENCE:
        assert is_best_approx(X, SUP, p1, p2, q) is Verdict.TRUE


def test_sufficient_condition():
    assert thm210_predicate(X, 1, 1, 2, SUP) is Verdict.FALSE
    seq = best_approx_sequence(X, SUP, 1000)
    for b in seq:
        if thm210_predicate(X, b.p1, b.p2, b.q, SUP) is Verdict.TRUE:
            assert is_best_approx(X, SUP, b.p1, b.p2, b.q) is Verdict.TRUE


def test_lower_bound_report_passes():
    for norm in (SUP, L1, L2):
        assert lower_bound_report(best_approx_sequence(X, norm, 2000))["passed"]


def test_next_denominator_bound():
    seq = best_approx_sequence(X, SUP, 500)
    rep = next_denominator_bound(seq, 500, use_lower_inequality=True)
    assert rep["bound"] >= 501


def test_decimal_input_undecidable():
    x = (parse_real("0.123456~1e-9"), parse_real("0.654321~1e-9"))
    with pytest.raises(UndecidableError):
        best_approx_sequence(x, SUP, 100000)


def test_nearest_lines_frozen_and_oracle():
    got = [(l.a, l.b, l.c) for l in nearest_affine_lines(X, SUP, 50).lines]
    assert got == SUP_LINES_50
    x1, x2 = oracles.value(Fraction(-1), Fraction(1), 2), oracles.value(Fraction(-1), Fraction(1), 3)
    assert oracles.nearest_lines(x1, x2, 50) == SUP_LINES_50


def test_nearest_lines_rational_point():
    lines = nearest_affine_lines((rational(Fraction(1, 3)), rational(Fraction(2, 5))), SUP, 20)
    assert lines.uniquely_rational or lines.lines[-1].distance is not None


# Perez-Marco analyzer


def _fib(n):
    out = [2, 3]
    while len(out) < n:
        out.append(out[-1] + out[-2])
    return out


def test_pm_fibonacci_converges():
    rep = pm_analyze(_fib(19))
    assert rep.classification_hint == "looks-convergent"


def test_pm_iterated_exponential_diverges():
    seq = iterated_exp_sequence(2, 4)
    assert isinstance(seq[1], IteratedExp)
    rep = pm_analyze(seq)
    assert rep.classification_hint == "looks-divergent"
    for t in rep.terms:
        assert t.lo <= 1 <= t.hi


def test_pm_short_decaying_run_is_not_divergent():
    rep = pm_analyze([2, 23, 54, 3883])
    assert rep.classification_hint == "inconclusive"


def test_pm_terms_direct():
    rep = pm_analyze([2, 4, 16, 256, 65536]).to_json()
    assert abs(rep["terms"][0] - 0.16335) < 1e-4
    assert abs(rep["terms"][1] - 0.25494) < 1e-4


def test_pm_clamps_small_terms():
    rep = pm_analyze([2, 3, 5, 8])
    assert rep.small_q == [1, 2]
    assert rep.clamped == []


def test_pm_input_validation():
    with pytest.raises(ValueError):
        pm_analyze([4, 3])
    with pytest.raises(ValueError):
        pm_analyze([1, 3])


def test_ell_n():
    assert ell_n([2, 9, 100], 2) == [1, 2]
    assert ell_n([2, 4, 100], 2) == [2]


def test_golden_norms_agree():
    x = (GOLDEN_FRAC, rational(0))
    rep = pm_compare_norms(x, [SUP, L1], 500)
    assert rep["identical_sequences"]


def test_compare_norms_no_contradiction():
    rng = random.Random(5)
    for _ in range(3):
        x = (quadratic(Fraction(rng.randint(0, 9), 10), Fraction(rng.randint(1, 9), 10), 2),
             quadratic(Fraction(rng.randint(0, 9), 10), Fraction(rng.randint(1, 9), 10), 5))
        rep = pm_compare_norms(x, [SUP, L1, L2], 1000)
        assert not rep["contradictory"]


def test_one_dimensional_matches_contfrac():
    theta = quadratic(Fraction(1, 3), Fraction(1, 7), 11)
    cf_qs = [c.q for c in convergents_up_to(theta, 5000)]
    ba_qs = denominators(best_approx_sequence((theta, rational(0)), SUP, 5000))
    assert sorted(set(cf_qs)) == ba_qs
