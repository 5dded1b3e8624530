from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from slitflow.errors import PreconditionViolation, SingularOrbit
from slitflow.flowsim import (
    SurfaceGeometry,
    compare_trajectories,
    ergodicity_diagnostic,
    retraces,
    reverse,
    same_events,
    simulate,
    window_fractions,
)
from slitflow.numerics import quadratic, rational

from . import oracles

unit = st.fractions(min_value=Fraction(1, 97), max_value=Fraction(96, 97), max_denominator=97)
slopes = st.fractions(min_value=-5, max_value=5, max_denominator=40)


def _run(lam, mu, theta, start, T):
    # draws whose start lies on the slit or whose orbit hits an endpoint are discarded
    geom = SurfaceGeometry.of(rational(lam), rational(mu))
    try:
        return simulate(geom, rational(theta), start, T)
    except (SingularOrbit, PreconditionViolation):
        assume(False)


@settings(max_examples=60, deadline=None)
@given(unit, unit, slopes, unit, unit, st.integers(1, 60))
def test_events_match_oracle(lam, mu, theta, x0, y0, T):
    assume(lam - theta * mu != 0)
    start = (x0 + 3, y0 - 2)
    traj = _run(lam, mu, theta, start, T)
    want = oracles.flow_events(lam, mu, theta, start, Fraction(T))
    assert [(e.time, e.s) for e in traj.events] == want


@settings(max_examples=40, deadline=None)
@given(unit, unit, slopes, unit, unit, st.integers(1, 60), st.sampled_from([0, 1]))
def test_conservation_and_alternation(lam, mu, theta, x0, y0, T, sheet):
    geom = SurfaceGeometry.of(rational(lam), rational(mu))
    try:
        traj = simulate(geom, rational(theta), (x0, y0), T, sheet=sheet)
    except (SingularOrbit, PreconditionViolation):
        assume(False)
    assert sum(traj.occupancy) == traj.elapsed == T
    assert traj.summary()["occupancy_sum_equals_elapsed"]
    sheets = [sheet] + [e.sheet for e in traj.events]
    assert all(a != b for a, b in zip(sheets, sheets[1:]))
    series = traj.occupancy_series()
    assert series[-1][1:] == tuple(traj.occupancy)


@settings(max_examples=40, deadline=None)
@given(unit, unit, slopes, unit, unit, st.integers(1, 40))
def test_reversal_retraces(lam, mu, theta, x0, y0, T):
    assume(lam - theta * mu != 0)
    geom = SurfaceGeometry.of(rational(lam), rational(mu))
    try:
        fwd = simulate(geom, rational(theta), (x0, y0), T)
        back = reverse(geom, fwd)
    except (SingularOrbit, PreconditionViolation):
        assume(False)
    assert retraces(fwd, back)


@settings(max_examples=30, deadline=None)
@given(unit, unit, slopes, unit, unit, st.integers(-5, 5), st.integers(-5, 5))
def test_translation_invariance(lam, mu, theta, x0, y0, a, b):
    geom = SurfaceGeometry.of(rational(lam), rational(mu))
    try:
        one = simulate(geom, rational(theta), (x0, y0), 30)
        two = simulate(geom, rational(theta), (x0 + a, y0 + b), 30)
    except (SingularOrbit, PreconditionViolation):
        assume(False)
    assert same_events(one, two)


def test_parallel_flow_never_crosses():
    geom = SurfaceGeometry.of(rational(Fraction(1, 2)), rational(Fraction(1, 4)))
    traj = simulate(geom, rational(2), (Fraction(1, 3), Fraction(1, 7)), 100)
    assert traj.events == []
    assert ergodicity_diagnostic(traj)["max_imbalance"] == 0.5


def test_singular_orbit():
    geom = SurfaceGeometry.of(rational(Fraction(1, 2)), rational(Fraction(1, 3)))
    with pytest.raises(SingularOrbit):
        simulate(geom, rational(0), (Fraction(0), Fraction(-1, 2)), 5)


def test_bad_inputs():
    geom = SurfaceGeometry.of(rational(Fraction(1, 2)), rational(Fraction(1, 3)))
    with pytest.raises(PreconditionViolation):
        SurfaceGeometry.of(rational(1), rational(Fraction(1, 2)))
    with pytest.raises(PreconditionViolation):
        simulate(geom, rational(1), (Fraction(1, 4), Fraction(1, 6)), 5)
    with pytest.raises(PreconditionViolation):
        simulate(geom, rational(1), (Fraction(1, 7), Fraction(1, 5)), 0)


def test_irrational_direction():
    geom = SurfaceGeometry.of(quadratic(-1, 1, 2), quadratic(-1, 1, 3))
    traj = simulate(geom, quadratic(0, 1, 5), (Fraction(1, 10), Fraction(1, 10)), 2000)
    times = [e.time for e in traj.events]
    assert times == sorted(times) and len(set(times)) == len(times)
    assert sum(traj.occupancy) == traj.elapsed
    assert not traj.exact
    again = simulate(geom, quadratic(0, 1, 5), (Fraction(1, 10), Fraction(1, 10)), 2000, bits=256)
    assert [(e.cell, e.sheet) for e in again.events] == [(e.cell, e.sheet) for e in traj.events]


def test_max_events_and_windows():
    geom = SurfaceGeometry.of(quadratic(-1, 1, 2), quadratic(-1, 1, 3))
    traj = simulate(geom, quadratic(0, 1, 7), (Fraction(1, 10), Fraction(1, 10)), 10**6, max_events=50)
    assert len(traj.events) == 50 and traj.truncated
    assert traj.elapsed == traj.events[-1].time
    fr = window_fractions(traj, 10)
    assert all(0 <= f <= 1 for f in fr)
    cmp = compare_trajectories(traj, traj, 10)
    assert cmp["larger_imbalance"] == "tie"
