"""Straight-line flow on two unit tori glued crosswise along a slit.

The slit is the segment from (0, 0) to (lambda, mu) with 0 < lambda, mu < 1.
A trajectory with inverse slope theta moves along (theta, 1) in the
universal cover, so the time parameter equals vertical displacement.  Each
crossing of a Z^2 translate of the slit switches sheets.

Row j of the cover (the strip j <= y <= j + mu that contains slit copies)
is visited during t in [j - y0, j - y0 + mu]; rows never overlap in time
because mu < 1.  Inside row j the copy (i, j) is hit at slit parameter
s = (c_j - i) / D with c_j = x0 + theta (j - y0) and D = lambda - theta mu,
so each row costs a handful of integer operations.

Rational inputs are handled with exact integers over a common denominator.
Other inputs are bracketed as integers over 2**bits; brackets that cannot
decide whether 0 < s < 1 fall back to exact comparison, and a crossing
through a slit endpoint raises SingularOrbit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import PreconditionViolation, SingularOrbit
from .numerics import (
    DEFAULT_BUDGET,
    ExactReal,
    Ordering,
    Real,
    as_real,
    compare,
    enclose,
    format_real,
    rational,
    to_float,
)

Number = int | Fraction


@dataclass(frozen=True)
class SurfaceGeometry:
    lam: Real
    mu: Real

    def __post_init__(self) -> None:
        for name, v in (("lambda", self.lam), ("mu", self.mu)):
            if compare(v, rational(0)) is not Ordering.GREATER or compare(v, rational(1)) is not Ordering.LESS:
                raise PreconditionViolation(f"{name} must lie strictly between 0 and 1")

    @classmethod
    def of(cls, lam, mu) -> "SurfaceGeometry":
        return cls(as_real(lam), as_real(mu))

    def to_json(self) -> dict:
        return {"lambda": format_real(self.lam), "mu": format_real(self.mu)}


@dataclass(frozen=True)
class Event:
    time: Fraction
    s: Fraction  # position along the slit, 0 < s < 1
    cell: tuple[int, int]
    sheet: int  # sheet entered

    def to_json(self) -> dict:
        return {"t": str(self.time), "s": str(self.s), "cell": list(self.cell), "sheet": self.sheet}


@dataclass
class Trajectory:
    geometry: SurfaceGeometry
    theta: Real
    start: tuple[Fraction, Fraction]
    start_sheet: int
    elapsed: Fraction
    events: list[Event]
    occupancy: list[Fraction]
    exact: bool
    end_sheet: int
    truncated: bool = False
    meta: dict = field(default_factory=dict)

    def summary(self) -> dict:
        total = sum(self.occupancy)
        return {
            "geometry": self.geometry.to_json(),
            "theta": format_real(self.theta),
            "start": [str(self.start[0]), str(self.start[1])],
            "start_sheet": self.start_sheet,
            "elapsed": str(self.elapsed),
            "events": len(self.events),
            "occupancy": [str(o) for o in self.occupancy],
            "occupancy_float": [float(o) for o in self.occupancy],
            "occupancy_sum_equals_elapsed": total == self.elapsed,
            "end_sheet": self.end_sheet,
            "exact": self.exact,
            "truncated_at_max_events": self.truncated,
        }

    def occupancy_series(self) -> list[tuple[Fraction, Fraction, Fraction]]:
        """(t, time on sheet 0, time on sheet 1) at the start, each event and the end."""
        occ = [Fraction(0), Fraction(0)]
        sheet, last = self.start_sheet, Fraction(0)
        rows = [(Fraction(0), Fraction(0), Fraction(0))]
        for ev in self.events:
            occ[sheet] += ev.time - last
            last, sheet = ev.time, ev.sheet
            rows.append((last, occ[0], occ[1]))
        occ[sheet] += self.elapsed - last
        rows.append((self.elapsed, occ[0], occ[1]))
        return rows


class _Scaled:
    """All inputs as integers over one scale, with lower/upper brackets."""

    def __init__(self, values: Sequence[Real], bits: int) -> None:
        exact = all(isinstance(v, ExactReal) and v.kind == "rational" for v in values)
        self.exact = exact
        if exact:
            fracs = [v.rational_part for v in values]
            scale = 1
            for f in fracs:
                scale = scale * f.denominator // math.gcd(scale, f.denominator)
            self.scale = scale
            self.lo = [int(f * scale) for f in fracs]
            self.hi = list(self.lo)
        else:
            self.scale = 1 << bits
            self.lo, self.hi = [], []
            for v in values:
                iv = enclose(v, bits + 2, None)
                self.lo.append(math.floor(iv.lo * self.scale))
                self.hi.append(math.ceil(iv.hi * self.scale))


def _mul_iv(a: tuple[int, int], b: tuple[int, int]) -> tuple[int, int]:
    prods = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    return min(prods), max(prods)


def _on_slit(geom: SurfaceGeometry, x: Fraction, y: Fraction, budget: int) -> bool:
    i, j = math.floor(x), math.floor(y)
    fx, fy = rational(x - i), rational(y - j)
    if compare(fy, geom.mu, budget) is Ordering.GREATER:
        return False
    return compare(fx * geom.mu, fy * geom.lam, budget) is Ordering.EQUAL


def simulate(
    geom: SurfaceGeometry,
    theta: Real | Number,
    start: tuple[Number, Number],
    T: Number,
    sheet: int = 0,
    max_events: int | None = None,
    bits: int = 128,
    budget: int = DEFAULT_BUDGET,
) -> Trajectory:
    """Flow from ``start`` on ``sheet`` for time T (or until ``max_events`` crossings)."""
    if sheet not in (0, 1):
        raise PreconditionViolation("sheet must be 0 or 1")
    T = Fraction(T)
    if T <= 0:
        raise PreconditionViolation("T must be positive")
    x0, y0 = Fraction(start[0]), Fraction(start[1])
    if _on_slit(geom, x0, y0, budget):
        raise PreconditionViolation("start point lies on the slit")
    theta = as_real(theta)
    sc = _Scaled([theta, geom.lam, geom.mu], bits)
    S = sc.scale
    th = (sc.lo[0], sc.hi[0])
    lam = (sc.lo[1], sc.hi[1])
    mu = (sc.lo[2], sc.hi[2])
    # D * S^2 = lam S - theta mu
    tm = _mul_iv(th, mu)
    d_iv = (lam[0] * S - tm[1], lam[1] * S - tm[0])
    events: list[Event] = []
    occupancy = [Fraction(0), Fraction(0)]
    cur_sheet, last_t = sheet, Fraction(0)
    truncated = False
    parallel = False
    if d_iv[0] <= 0 <= d_iv[1]:
        order = compare(geom.lam - theta * geom.mu, rational(0), budget)
        if order is Ordering.UNDECIDABLE:
            raise PreconditionViolation("cannot decide whether the flow is parallel to the slit")
        parallel = order is Ordering.EQUAL
        if not parallel and not sc.exact:
            # refine until the sign of D is clear
            return simulate(geom, theta, start, T, sheet, max_events, 2 * bits, budget)
    theta_exact = sc.exact
    mu_f = geom.mu.rational_part if sc.exact else None
    if not parallel:
        positive = d_iv[0] > 0
        j = math.floor(y0 - 1)
        X0 = x0 * S
        while True:
            row_start = j - y0
            if row_start > T:
                break
            # c_j S^2 = x0 S^2 + theta S (j - y0) S, kept as exact Fractions of integers
            shift = (j - y0) * S
            c_lo = X0 * S + min(th[0] * shift, th[1] * shift)
            c_hi = X0 * S + max(th[0] * shift, th[1] * shift)
            s2 = S * S
            if positive:
                i_lo = math.floor((c_lo - d_iv[1]) / s2)
                i_hi = math.ceil(c_hi / s2)
            else:
                i_lo = math.floor(c_lo / s2)
                i_hi = math.ceil((c_hi - d_iv[0]) / s2)
            row_events = []
            for i in range(i_lo, i_hi + 1):
                hit = _hit(geom, theta, x0, y0, i, j, c_lo, c_hi, d_iv, S, positive, theta_exact, budget)
                if hit is None:
                    continue
                s = hit
                t = (j - y0) + s * (mu_f if mu_f is not None else _mid(mu, S))
                if t <= 0:
                    continue
                row_events.append((t, s, i))
            row_events.sort()
            stop = False
            for t, s, i in row_events:
                if t > T:
                    stop = True
                    break
                occupancy[cur_sheet] += t - last_t
                cur_sheet ^= 1
                last_t = t
                events.append(Event(t, s, (i, j), cur_sheet))
                if max_events is not None and len(events) >= max_events:
                    truncated = True
                    stop = True
                    break
            if stop:
                break
            j += 1
    end = events[-1].time if truncated else T
    occupancy[cur_sheet] += end - last_t
    return Trajectory(geom, theta, (x0, y0), sheet, end, events, occupancy, sc.exact, cur_sheet, truncated)


def _mid(iv: tuple[int, int], S: int) -> Fraction:
    return Fraction(iv[0] + iv[1], 2 * S)


def _hit(geom, theta, x0, y0, i, j, c_lo, c_hi, d_iv, S, positive, exact, budget) -> Fraction | None:
    """Slit parameter s in (0, 1) of the crossing with copy (i, j), or None."""
    s2 = S * S
    n_lo, n_hi = c_lo - i * s2, c_hi - i * s2  # (c_j - i) S^2
    # 0 < s < 1  <=>  0 < n/D < 1
    if positive:
        if n_hi <= 0 and not (exact and n_hi == 0):
            return None
        if n_lo >= d_iv[1] and not (exact and n_lo == d_iv[1]):
            return None
        clear = n_lo > 0 and n_hi < d_iv[0]
    else:
        if n_lo >= 0 and not (exact and n_lo == 0):
            return None
        if n_hi <= d_iv[0] and not (exact and n_hi == d_iv[0]):
            return None
        clear = n_hi < 0 and n_lo > d_iv[1]
    if exact:
        n, d = n_lo, d_iv[0]
        if n == 0 or n == d:
            raise SingularOrbit(f"trajectory meets a slit endpoint in cell ({i}, {j})")
        return Fraction(n, d)
    if not clear:
        numer = x0 - i + theta * (j - y0)
        denom = geom.lam - theta * geom.mu
        s_real = numer / denom
        lo_o = compare(s_real, rational(0), budget)
        hi_o = compare(s_real, rational(1), budget)
        if Ordering.EQUAL in (lo_o, hi_o):
            raise SingularOrbit(f"trajectory meets a slit endpoint in cell ({i}, {j})")
        if Ordering.UNDECIDABLE in (lo_o, hi_o):
            raise SingularOrbit(f"crossing with cell ({i}, {j}) too close to an endpoint to resolve")
        if lo_o is not Ordering.GREATER or hi_o is not Ordering.LESS:
            return None
    return Fraction(n_lo + n_hi, d_iv[0] + d_iv[1])


# ---------------------------------------------------------------------------
# symmetries


def reflect_point(geom: SurfaceGeometry, p: tuple[Number, Number]) -> tuple[Fraction, Fraction]:
    """(lambda, mu) - p: maps the slit set to itself and reverses the flow."""
    lam, mu = geom.lam, geom.mu
    if not (isinstance(lam, ExactReal) and lam.kind == "rational" and isinstance(mu, ExactReal) and mu.kind == "rational"):
        raise PreconditionViolation("reflection needs rational lambda and mu")
    return lam.rational_part - Fraction(p[0]), mu.rational_part - Fraction(p[1])


def reverse(geom: SurfaceGeometry, traj: Trajectory) -> Trajectory:
    """Run the flow backwards from the end point of ``traj`` for the same time.

    Backward flow from P is forward flow from the reflection of P, with each
    slit parameter s read as 1 - s.
    """
    theta = as_real(traj.theta)
    end = (traj.start[0] + to_exact(theta) * traj.elapsed, traj.start[1] + traj.elapsed)
    start = reflect_point(geom, end)
    back = simulate(geom, theta, start, traj.elapsed, traj.end_sheet)
    return back


def to_exact(x: Real) -> Fraction:
    if isinstance(x, ExactReal) and x.kind == "rational":
        return x.rational_part
    raise PreconditionViolation("exact reversal needs a rational direction")


def retraces(forward: Trajectory, backward: Trajectory) -> bool:
    """Backward events are the forward ones in reverse order, at mirrored times and slit positions."""
    if len(forward.events) != len(backward.events):
        return False
    T = forward.elapsed
    for f, b in zip(forward.events, reversed(backward.events)):
        if b.time != T - f.time or b.s != 1 - f.s:
            return False
    sheets_f = [forward.start_sheet] + [e.sheet for e in forward.events]
    sheets_b = [backward.start_sheet] + [e.sheet for e in backward.events]
    return sheets_f == sheets_b[::-1]


def same_events(a: Trajectory, b: Trajectory) -> bool:
    if len(a.events) != len(b.events):
        return False
    return all(x.time == y.time and x.s == y.s and x.sheet == y.sheet for x, y in zip(a.events, b.events))


# ---------------------------------------------------------------------------
# diagnostics


def window_fractions(traj: Trajectory, window_count: int) -> list[Fraction]:
    """Share of each of ``window_count`` equal time windows spent on sheet 0."""
    if window_count < 2:
        raise PreconditionViolation("need at least two windows")
    T = traj.elapsed
    width = T / window_count
    on0 = [Fraction(0)] * window_count
    sheet, last = traj.start_sheet, Fraction(0)
    boundaries = [Event(T, Fraction(0), (0, 0), sheet)]

    def credit(a: Fraction, b: Fraction, sh: int) -> None:
        if sh != 0 or b <= a:
            return
        k = min(int(a / width), window_count - 1)
        while a < b:
            edge = min(b, width * (k + 1))
            on0[k] += edge - a
            a = edge
            k += 1

    for ev in traj.events + boundaries:
        credit(last, ev.time, sheet)
        last, sheet = ev.time, ev.sheet
    return [o / width for o in on0]


def ergodicity_diagnostic(traj: Trajectory, window_count: int = 20) -> dict:
    """Per-window sheet-0 shares and their deviation from 1/2 (qualitative only)."""
    fracs = window_fractions(traj, window_count)
    dev = [abs(f - Fraction(1, 2)) for f in fracs]
    return {
        "windows": window_count,
        "fractions": [float(f) for f in fracs],
        "deviation": [float(d) for d in dev],
        "max_imbalance": float(max(dev)),
        "mean_imbalance": float(sum(dev) / len(dev)),
        "overall_fraction": float(traj.occupancy[0] / traj.elapsed),
        "label": "qualitative",
    }


def compare_trajectories(a: Trajectory, b: Trajectory, window_count: int = 20) -> dict:
    da, db = ergodicity_diagnostic(a, window_count), ergodicity_diagnostic(b, window_count)
    if da["max_imbalance"] > db["max_imbalance"]:
        larger = "first"
    elif db["max_imbalance"] > da["max_imbalance"]:
        larger = "second"
    else:
        larger = "tie"
    return {"first": da, "second": db, "larger_imbalance": larger, "label": "qualitative"}
