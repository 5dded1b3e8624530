from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slitflow.bestapprox import best_approx_sequence
from slitflow.errors import DegenerateError, PreconditionViolation
from slitflow.numerics import SUP, Ordering, Verdict, compare, quadratic, rational, to_float
from slitflow.surface import (
    Loop,
    Slit,
    alternation_report,
    classify_rel_Z,
    cross,
    hor,
    in_s_k,
    is_dehn_twist,
    liouville_convergent,
    min_area_check,
    separating_slit,
    z_expansion,
)

from . import oracles

CTX = (quadratic(-1, 1, 2), quadratic(-1, 1, 3))


def test_cross_example():
    ctx = (rational(Fraction(1, 2)), rational(Fraction(1, 4)))
    w = Slit(1, 2, ctx)
    assert compare(cross(w, Loop(1, 1)), rational(Fraction(3, 4))) is Ordering.EQUAL


def test_hor_example():
    assert abs(to_float(hor(quadratic(0, 1, 2), Loop(3, 2))) - 0.171572875) < 1e-9


def test_loop_must_be_primitive():
    with pytest.raises(ValueError):
        Loop(2, 4)


def test_degenerate_slit():
    with pytest.raises(DegenerateError):
        Slit(0, -1, (rational(Fraction(1, 2)), rational(1)))


def test_separating_index():
    with pytest.raises(ValueError):
        separating_slit(1, 2, CTX)
    assert separating_slit(2, 4, CTX).separating


def test_dehn_twist():
    w = separating_slit(0, 2, CTX)
    v = Loop(1, 3)
    assert is_dehn_twist(w, w.twist(v, 2), v)
    assert not is_dehn_twist(w, w.plus(v, 1), v)


def _ze_triples(ze):
    return [(e.kind, e.a, e.b) for e in ze.entries]


def test_z_expansion_matches_oracle():
    theta = quadratic(0, 1, 2)
    ze = z_expansion(theta, CTX, 200)
    want = oracles.z_expansion(
        oracles.value(Fraction(0), Fraction(1), 2),
        oracles.value(Fraction(-1), Fraction(1), 2),
        oracles.value(Fraction(-1), Fraction(1), 3),
        200,
    )
    assert _ze_triples(ze) == want


@settings(max_examples=15, deadline=None)
@given(
    st.fractions(min_value=-2, max_value=2, max_denominator=12),
    st.fractions(min_value=Fraction(1, 12), max_value=2, max_denominator=12),
)
def test_z_expansion_property(a, b):
    ze = z_expansion(quadratic(a, b, 7), CTX, 60)
    want = oracles.z_expansion(
        oracles.value(a, b, 7),
        oracles.value(Fraction(-1), Fraction(1), 2),
        oracles.value(Fraction(-1), Fraction(1), 3),
        60,
    )
    assert _ze_triples(ze) == want
    hs = [to_float(e.height) for e in ze.entries]
    assert hs == sorted(hs)
    offs = [to_float(e.hor) for e in ze.entries]
    assert all(x > y for x, y in zip(offs, offs[1:]))


def test_height_one_scan():
    ze = z_expansion(quadratic(0, 1, 2), CTX, 1)
    assert len(ze.entries) >= 1


def test_alternation_report_fields():
    ze = z_expansion(quadratic(0, 1, 2), CTX, 300)
    rep = alternation_report(ze)
    assert set(rep) >= {"alternating_from", "cross_partial_sums"}
    assert all(b >= a for a, b in zip(rep["cross_partial_sums"], rep["cross_partial_sums"][1:]))


def test_classify_rel_z():
    rep = classify_rel_Z([2, 4, 16, 256])
    assert rep["tag"].startswith("diophantine-like")
    rep = classify_rel_Z([2, 4, 2**20, 2**200])
    assert rep["tag"] == "liouville-like"
    with pytest.raises(ValueError):
        classify_rel_Z([2, 3])


def test_liouville_convergent_direct():
    seq = best_approx_sequence(CTX, SUP, 100)
    ba = seq[-1]
    w = Slit(2, 2, CTX)
    lc = liouville_convergent(w, ba)
    a, b = ba.p1 + 2 * ba.q, ba.p2 + 2 * ba.q
    import math

    d = math.gcd(a, b)
    assert lc.d == d and (lc.u.p, lc.u.q) == (a // d, b // d)
    assert lc.status == "restriction-unverified"


def test_min_area_window_checks():
    w = separating_slit(0, 4, CTX)
    assert in_s_k(w, 3, 10**9) is Verdict.TRUE
    with pytest.raises(PreconditionViolation):
        min_area_check([w, w, Slit(1, 4, CTX)], Loop(1, 1), 3, 10**9)
