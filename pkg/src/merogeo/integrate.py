"""Numerical continuation of geodesics on the Riemann sphere.

In a chart where the connection is ``R(z) dz`` a geodesic satisfies

    z'' = -R(z) z'**2,

and, with ``u`` a primitive of ``R`` along the curve (``u' = R(z) z'``), the
quantity ``exp(u) z'`` stays constant.  We integrate ``(z, z', u)`` with an
embedded Dormand-Prince 5(4) pair and use the constant as a drift monitor.
``u`` restarts from 0 at every chart switch.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .sphere import Chart, ChartPoint, SphereConnection, to_other_chart, PoleId

__all__ = [
    "DEFAULT_TOL",
    "EventKind",
    "TerminalEvent",
    "TraceOptions",
    "GeodesicState",
    "GeodesicTrace",
    "InvalidInitialData",
    "PoleEvaluationError",
    "geodesic_rhs",
    "trace",
    "trace_from",
    "invariant_drift",
    "reverse_trace",
]

DEFAULT_TOL = 1e-10

# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                187 / 2100, 1 / 40])
_E = _B5 - _B4


class EventKind(str, enum.Enum):
    POLE_APPROACH = "PoleApproach"
    ESCAPE = "Escape"
    HORIZON = "HorizonReached"
    CLOSURE = "ClosureDetected"
    BREAKDOWN = "NumericalBreakdown"


@dataclass(frozen=True)
class TerminalEvent:
    kind: EventKind
    t: float
    pole: PoleId | None = None
    detail: str = ""

    def to_json(self) -> dict:
        out = {"kind": self.kind.value, "t": self.t}
        if self.pole is not None:
            out["pole"] = self.pole
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass(frozen=True)
class TraceOptions:
    rtol: float = DEFAULT_TOL
    atol: float = DEFAULT_TOL
    pole_radius: float = 1e-5
    min_step: float = 1e-14
    max_steps: int = 2_000_000
    # upper bound on the chart distance between consecutive samples
    max_spacing: float = 0.05
    switch_radius: float = 2.0
    detect_closure: bool = True
    closure_tol: float = 1e-6
    closure_angle_tol: float = 1e-4
    safety: float = 0.9
    max_factor: float = 5.0
    min_factor: float = 0.2

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")


class InvalidInitialData(ValueError):
    pass


class PoleEvaluationError(ArithmeticError):
    """The connection form was evaluated (numerically) at a pole."""


@dataclass(frozen=True)
class GeodesicState:
    t: float
    point: ChartPoint
    u: complex = 0j
    c: complex | None = None


def _form_eval(num, den, z: complex) -> complex:
    n = 0j
    for a in reversed(num):
        n = n * z + a
    d = 0j
    for a in reversed(den):
        d = d * z + a
    if abs(d) < 1e-300:
        raise PoleEvaluationError(f"connection form evaluated at a pole near {z}")
    return n / d


def geodesic_rhs(conn: SphereConnection, state: GeodesicState) -> tuple[complex, complex, complex]:
    """Right-hand side ``(z', v', u') = (v, -R(z) v**2, R(z) v)``."""
    form = conn.form(state.point.chart)
    z, v = state.point.position, state.point.velocity
    r = _form_eval(form.num, form.den, z)
    return v, -r * v * v, r * v


def _rhs(num, den, y: np.ndarray) -> np.ndarray:
    r = _form_eval(num, den, y[0])
    v = y[1]
    return np.array([v, -r * v * v, r * v])


def _dp_step(num, den, y, k1, h):
    k = [k1]
    for s in range(1, 7):
        acc = y.copy()
        for j, a in enumerate(_A[s]):
            if a:
                acc = acc + (h * a) * k[j]
        k.append(_rhs(num, den, acc))
    # stage 7 is evaluated at y5 (FSAL)
    y5 = y + h * sum(b * kk for b, kk in zip(_B5, k) if b)
    err = h * sum(e * kk for e, kk in zip(_E, k) if e)
    return y5, err, k[6]


@dataclass
class GeodesicTrace:
    """Samples of a numerically continued geodesic.

    ``chart`` tags each sample; ``z``/``v`` are position and velocity in that
    chart; ``u`` and ``c`` carry the per-segment primitive and constant.
    ``lattice`` is set for traces on a torus (positions are lifts to C).
    """

    t: np.ndarray
    chart: np.ndarray
    z: np.ndarray
    v: np.ndarray
    u: np.ndarray
    c: np.ndarray
    event: TerminalEvent
    max_invariant_drift: float
    chart_switches: list[float] = field(default_factory=list)
    switch_log: list[tuple[float, ChartPoint, ChartPoint]] = field(default_factory=list)
    lattice: complex | None = None

    def __len__(self) -> int:
        return self.t.size

    @property
    def samples(self) -> list[tuple[float, str, complex, complex]]:
        return [(float(t), str(ch), complex(z), complex(v))
                for t, ch, z, v in zip(self.t, self.chart, self.z, self.v)]

    @property
    def start(self) -> ChartPoint:
        return ChartPoint(Chart(self.chart[0]), complex(self.z[0]), complex(self.v[0]))

    @property
    def final(self) -> ChartPoint:
        return ChartPoint(Chart(self.chart[-1]), complex(self.z[-1]), complex(self.v[-1]))

    @property
    def duration(self) -> float:
        return float(self.t[-1] - self.t[0])

    def slices(self) -> list[tuple[int, int]]:
        """Index ranges ``[i, j)`` of maximal runs sampled in a single chart."""
        out = []
        i = 0
        n = len(self)
        for j in range(1, n + 1):
            if j == n or self.chart[j] != self.chart[i]:
                out.append((i, j))
                i = j
        return out

    def positions_z(self) -> np.ndarray:
        """All positions expressed in the standard chart."""
        z = self.z.astype(complex).copy()
        mask = self.chart == Chart.W.value
        with np.errstate(divide="ignore", invalid="ignore"):
            z[mask] = 1.0 / z[mask]
        return z

    def velocities_z(self) -> np.ndarray:
        v = self.v.astype(complex).copy()
        mask = self.chart == Chart.W.value
        w = self.z[mask]
        with np.errstate(divide="ignore", invalid="ignore"):
            v[mask] = -v[mask] / (w * w)
        return v


def _segment_drift(u: np.ndarray, v: np.ndarray, c: np.ndarray) -> np.ndarray:
    return np.abs(np.exp(u) * v - c) / np.abs(c)


def trace(conn: SphereConnection, z0: complex, v0: complex, t_end: float,
          opts: TraceOptions | None = None) -> GeodesicTrace:
    """Continue the geodesic with ``sigma(0) = z0``, ``sigma'(0) = v0``.

    ``z0`` and ``v0`` are standard-chart values.  Integration stops at the
    first terminal event or at ``t_end``.
    """
    opts = opts or TraceOptions()
    z0, v0 = complex(z0), complex(v0)
    if not (cmath.isfinite(z0) and cmath.isfinite(v0)):
        raise InvalidInitialData("initial data must be finite")
    point = ChartPoint(Chart.Z, z0, v0)
    if abs(z0) > opts.switch_radius:
        point = to_other_chart(point)
    return trace_from(conn, point, t_end, opts)


def _check_start(conn: SphereConnection, p: ChartPoint) -> None:
    if p.velocity is None or p.velocity == 0:
        raise InvalidInitialData("initial velocity must be nonzero")
    for loc, pid in conn.poles_in(p.chart):
        if abs(loc - p.position) <= 1e-12 * max(1.0, abs(loc)):
            raise InvalidInitialData(f"initial point is the pole {pid}")
    form = conn.form(p.chart)
    try:
        _form_eval(form.num, form.den, p.position)
    except PoleEvaluationError as exc:
        raise InvalidInitialData(str(exc)) from None


def trace_from(conn: SphereConnection, start: ChartPoint, t_end: float,
               opts: TraceOptions | None = None) -> GeodesicTrace:
    """Like :func:`trace` but starting from a chart-tagged point."""
    opts = opts or TraceOptions()
    if not t_end > 0:
        raise InvalidInitialData("t_end must be positive")
    _check_start(conn, start)

    chart = start.chart
    form = conn.form(chart)
    num, den = form.num, form.den
    poles = conn.poles_in(chart)
    y = np.array([start.position, start.velocity, 0j])
    c = complex(start.velocity)
    k1 = _rhs(num, den, y)

    ts, charts, zs, vs, us, cs = [0.0], [chart.value], [y[0]], [y[1]], [y[2]], [c]
    switches: list[float] = []
    switch_log: list[tuple[float, ChartPoint, ChartPoint]] = []

    def start_in(ch: Chart):
        try:
            return start.in_chart(ch)
        except ValueError:
            return None

    ref = start_in(chart) if opts.detect_closure else None
    t = 0.0
    speed = abs(y[1])
    h = min(0.01, opts.max_spacing / speed, t_end)
    prev_dist = math.inf
    decreasing = 0
    event: TerminalEvent | None = None
    steps = 0

    while event is None:
        if t_end - t <= opts.min_step * max(1.0, t):
            event = TerminalEvent(EventKind.HORIZON, t)
            break
        speed = abs(y[1])
        h = min(h, t_end - t, opts.max_spacing / speed if speed > 0 else h)
        if h < opts.min_step:
            event = TerminalEvent(EventKind.BREAKDOWN, t, detail="step size underflow")
            break
        steps += 1
        if steps > opts.max_steps:
            event = TerminalEvent(EventKind.BREAKDOWN, t, detail="step budget exhausted")
            break
        try:
            y_new, err_vec, k7 = _dp_step(num, den, y, k1, h)
        except PoleEvaluationError:
            h *= 0.1
            continue
        scale = opts.atol + opts.rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.max(np.abs(err_vec) / scale))
        if not math.isfinite(err) or err > 1.0:
            factor = opts.min_factor if not math.isfinite(err) else max(
                opts.min_factor, opts.safety * err ** -0.2)
            h *= factor
            continue
        moved = abs(y_new[0] - y[0])
        if moved >= opts.max_spacing:
            # the speed grew inside the step; keep samples strictly denser than the spacing
            h *= 0.9 * opts.max_spacing / moved
            continue

        t_new = t + h
        if t_end - t_new <= opts.min_step * max(1.0, t_new):
            t_new = t_end

        # closure: closest approach to the start inside this step
        if ref is not None and t > 0:
            hit = _closure_in_step(num, den, y, k1, y_new, h, ref, opts)
            if hit is not None:
                s, ys = hit
                ts.append(t + s)
                charts.append(chart.value)
                zs.append(ys[0])
                vs.append(ys[1])
                us.append(ys[2])
                cs.append(c)
                event = TerminalEvent(EventKind.CLOSURE, t + s)
                break

        t, y, k1 = t_new, y_new, k7
        ts.append(t)
        charts.append(chart.value)
        zs.append(y[0])
        vs.append(y[1])
        us.append(y[2])
        cs.append(c)

        if poles:
            dists = [abs(y[0] - loc) for loc, _ in poles]
            k = int(np.argmin(dists))
            dist = dists[k]
            decreasing = decreasing + 1 if dist < prev_dist else 0
            prev_dist = dist
            if dist < opts.pole_radius and decreasing >= 3:
                event = TerminalEvent(EventKind.POLE_APPROACH, t, pole=poles[k][1])
                break

        if t >= t_end:
            event = TerminalEvent(EventKind.HORIZON, t)
            break

        if abs(y[0]) > opts.switch_radius:
            before = ChartPoint(chart, complex(y[0]), complex(y[1]))
            after = to_other_chart(before)
            switches.append(t)
            switch_log.append((t, before, after))
            chart = after.chart
            form = conn.form(chart)
            num, den = form.num, form.den
            poles = conn.poles_in(chart)
            y = np.array([after.position, after.velocity, 0j])
            c = complex(after.velocity)
            k1 = _rhs(num, den, y)
            ref = start_in(chart) if opts.detect_closure else None
            prev_dist, decreasing = math.inf, 0

        h *= min(opts.max_factor, opts.safety * err ** -0.2) if err > 0 else opts.max_factor

    tr = GeodesicTrace(
        t=np.array(ts), chart=np.array(charts), z=np.array(zs, dtype=complex),
        v=np.array(vs, dtype=complex), u=np.array(us, dtype=complex),
        c=np.array(cs, dtype=complex), event=event, max_invariant_drift=0.0,
        chart_switches=switches, switch_log=switch_log)
    tr.max_invariant_drift = invariant_drift(tr)
    return tr


def _closure_in_step(num, den, y, k1, y_new, h, ref: ChartPoint, opts: TraceOptions):
    """Locate a return to ``ref`` inside the step ``y -> y_new``.

    The closest approach is the sign change (negative to positive) of
    ``g = Re(conj(z - z_ref) z')``; it is bracketed by bisection on sub-steps
    of the same Runge-Kutta formula.
    """
    def g(state):
        return ((state[0] - ref.position).conjugate() * state[1]).real

    ga, gb = g(y), g(y_new)
    if not (ga < 0 <= gb):
        return None
    step_len = abs(y_new[0] - y[0])
    if min(abs(y[0] - ref.position), abs(y_new[0] - ref.position)) > step_len + opts.closure_tol:
        return None
    lo, hi = 0.0, h
    state = y_new
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        state, _, _ = _dp_step(num, den, y, k1, mid)
        if g(state) < 0:
            lo = mid
        else:
            hi = mid
    s = hi
    state, _, _ = _dp_step(num, den, y, k1, s)
    dist = abs(state[0] - ref.position)
    angle = abs(cmath.phase(state[1] / ref.velocity))
    if dist < opts.closure_tol and angle < opts.closure_angle_tol:
        return s, state
    return None


def invariant_drift(tr: GeodesicTrace) -> float:
    """Largest relative deviation of ``exp(u) v`` from its segment constant."""
    if len(tr) == 0:
        raise ValueError("empty trace")
    return float(np.max(_segment_drift(tr.u, tr.v, tr.c)))


def reverse_trace(conn: SphereConnection, tr: GeodesicTrace,
                  opts: TraceOptions | None = None) -> GeodesicTrace:
    """Integrate back from the end of ``tr`` with negated velocity."""
    if tr.event.kind is not EventKind.HORIZON:
        raise InvalidInitialData("reverse_trace needs a trace that reached its horizon")
    opts = replace(opts or TraceOptions(), detect_closure=False)
    end = tr.final
    back = ChartPoint(end.chart, end.position, -end.velocity)
    return trace_from(conn, back, tr.duration, opts)
