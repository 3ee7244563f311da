"""Heuristic classification of the forward limit set of a traced geodesic.

A finite trace can prove a pole limit or a closure, and it can exhibit
self-crossings.  Limit cycles, boundary graphs and dense behaviour can only
be suggested, so those verdicts carry the ``Candidate`` suffix together with
the evidence that led to them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..integrate import EventKind, GeodesicTrace, TraceOptions, trace_from
from ..sphere import Chart, SphereConnection
from .closure import detect_closure
from .cycles import (AmbiguousWindingError, CycleChartError, GeodesicCycle,
                     cycle_from_closed_trace, gauss_bonnet_report,
                     residue_condition_report, winding_number)
from .intersections import self_intersections

__all__ = ["OmegaOptions", "OmegaVerdict", "TAGS", "classify_omega"]

TAGS = (
    "PoleLimit",
    "ClosedGeodesic",
    "LimitCycleCandidate",
    "BoundaryGraphCandidate",
    "DenseCandidate",
    "SelfIntersecting",
    "Unresolved",
)


@dataclass(frozen=True)
class OmegaOptions:
    min_crossings: int = 2
    # number of horizon doublings used by the crossing and coverage tests
    doublings: int = 2
    closure_tol: float = 1e-6
    closure_angle_tol: float = 1e-4
    # a breakdown this close to a pole (and approaching it) counts as a pole limit
    pole_capture: float = 1e-3
    # required shrink factor of the pole distance over the second half of the
    # longest trace for an infinite-time pole approach
    asymptotic_shrink: float = 0.85
    min_returns: int = 5
    geometric_ratio: float = 0.9
    graph_radius: float = 0.05
    grid: int = 40
    coverage: float = 0.95
    min_area_fraction: float = 0.25
    trace_opts: TraceOptions = field(default_factory=TraceOptions)


@dataclass
class OmegaVerdict:
    tag: str
    evidence: dict = field(default_factory=dict)
    residue_checks: list = field(default_factory=list)
    pole: object = None
    periodic: bool | None = None
    count: int | None = None

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ValueError(f"unknown verdict {self.tag!r}")
        if self.tag == "SelfIntersecting" and not (self.count and self.count >= 1):
            raise ValueError("SelfIntersecting needs a positive crossing count")

    @classmethod
    def pole_limit(cls, pole, **evidence):
        return cls("PoleLimit", evidence, pole=pole)

    @classmethod
    def closed(cls, periodic: bool, **evidence):
        return cls("ClosedGeodesic", evidence, periodic=periodic)

    @classmethod
    def limit_cycle(cls, **evidence):
        return cls("LimitCycleCandidate", evidence)

    @classmethod
    def boundary_graph(cls, **evidence):
        return cls("BoundaryGraphCandidate", evidence)

    @classmethod
    def dense(cls, **evidence):
        return cls("DenseCandidate", evidence)

    @classmethod
    def self_intersecting(cls, count: int, **evidence):
        return cls("SelfIntersecting", evidence, count=count)

    @classmethod
    def unresolved(cls, **evidence):
        return cls("Unresolved", evidence)

    def to_json(self) -> dict:
        out = {"tag": self.tag}
        if self.pole is not None:
            out["pole"] = self.pole
        if self.periodic is not None:
            out["periodic"] = self.periodic
        if self.count is not None:
            out["count"] = self.count
        out["evidence"] = self.evidence
        out["residue_checks"] = self.residue_checks
        return out


def _nearest_pole(conn: SphereConnection, chart: str, pos: complex):
    best, best_id = math.inf, None
    for loc, pid in conn.poles_in(Chart(chart)):
        d = abs(pos - loc)
        if d < best:
            best, best_id = d, pid
    return best, best_id


def _pole_capture(conn, tr: GeodesicTrace, opts: OmegaOptions):
    """Pole id if a breakdown happened while closing in on a pole."""
    n = len(tr)
    if n < 4:
        return None
    dists = []
    for k in range(n - 4, n):
        dists.append(_nearest_pole(conn, tr.chart[k], complex(tr.z[k])))
    last_d, pid = dists[-1]
    decreasing = all(dists[i + 1][0] < dists[i][0] for i in range(3))
    if pid is not None and last_d < opts.pole_capture and decreasing:
        return pid, last_d
    return None


def _asymptotic_pole(conn, tr: GeodesicTrace, opts: OmegaOptions):
    """Pole approached monotonically over the second half of ``tr``.

    Poles with real residue below -1 attract geodesics only in infinite
    time, so the integrator never reaches the pole radius.  We ask for the
    distance to one pole to shrink at every sample of the second half and
    to lose at least 15% over it.
    """
    n = len(tr)
    if n < 20:
        return None
    half = n // 2
    d0, pid = _nearest_pole(conn, tr.chart[half], complex(tr.z[half]))
    if pid is None:
        return None
    prev = d0
    for k in range(half + 1, n):
        d, q = _nearest_pole(conn, tr.chart[k], complex(tr.z[k]))
        if q != pid or d >= prev:
            return None
        prev = d
    if prev > opts.asymptotic_shrink * d0:
        return None
    return pid, d0, prev


def _closure_checks(conn, tr, report) -> tuple[dict, list]:
    evidence = {"length": report.length, "position_error": report.position_error,
                "angle_error": report.angle_error}
    checks = []
    if tr.lattice is not None:
        return evidence, checks
    try:
        cycle = cycle_from_closed_trace(tr, report)
        gb = gauss_bonnet_report(conn, cycle)
    except (CycleChartError, AmbiguousWindingError, ValueError) as exc:
        evidence["gauss_bonnet"] = f"skipped: {exc}"
        return evidence, checks
    evidence["gauss_bonnet_defect"] = gb["defect"]
    checks.append(residue_condition_report(conn, gb["enclosed_poles"]).to_json())
    return evidence, checks


def _extend(conn, tr: GeodesicTrace, horizon: float, opts: OmegaOptions) -> GeodesicTrace:
    return trace_from(conn, tr.start, horizon, opts.trace_opts)


def _section_returns(z: np.ndarray, v: np.ndarray, anchor: int, window: float):
    """Signed offsets of the crossings of a transversal through ``z[anchor]``.

    The section is the normal line to the velocity at the anchor; only
    crossings in the flow direction within ``window`` of the anchor count.
    Returns ``(index, offset)`` pairs in time order.
    """
    p, tau = z[anchor], v[anchor] / abs(v[anchor])
    nu = 1j * tau
    side = (np.conj(tau) * (z - p)).real
    out = []
    for k in range(z.size - 1):
        a, b = side[k], side[k + 1]
        if not (a < 0 <= b):
            continue
        x = z[k] + (z[k + 1] - z[k]) * (a / (a - b))
        s = float((np.conj(nu) * (x - p)).real)
        if abs(s) <= window:
            out.append((k, s))
    return out


def _recurrence(conn, tr: GeodesicTrace, opts: OmegaOptions):
    """Section-return analysis on the last single-chart slice of ``tr``."""
    i0, i1 = tr.slices()[-1]
    if i1 - i0 < 50:
        return None
    z = tr.z[i0:i1].astype(complex)
    v = tr.v[i0:i1].astype(complex)
    chart = tr.chart[i0]
    diam = float(max(np.ptp(z.real), np.ptp(z.imag)))
    if diam == 0:
        return None
    anchor = (i1 - i0) // 4
    hits = _section_returns(z[anchor:], v[anchor:], 0, 0.5 * diam)
    offsets = np.array([s for _, s in hits[1:]])
    if offsets.size < opts.min_returns:
        return None
    deltas = np.diff(offsets)
    nonzero = deltas[np.abs(deltas) > 1e-14]
    if nonzero.size < opts.min_returns - 2:
        return None
    monotone = bool(np.all(nonzero > 0) or np.all(nonzero < 0))
    if not monotone:
        return None
    mags = np.abs(nonzero)
    ratios = mags[1:] / mags[:-1]
    ratio = float(np.median(ratios))
    last = hits[-1][0] + anchor
    prev = hits[-2][0] + anchor
    loop = z[prev:last + 1]
    loop_pole_dist = min((float(np.min(np.abs(loop - loc))) for loc, _ in conn.poles_in(Chart(chart))),
                         default=math.inf)
    ev = {
        "returns": int(offsets.size),
        "median_ratio": ratio,
        "last_step": float(mags[-1]),
        "loop_pole_distance": loop_pole_dist,
        "chart": str(chart),
    }
    if ratio < 1:
        ev["limit_offset"] = float(offsets[-1] + nonzero[-1] * ratio / (1 - ratio))
    return ev, loop, Chart(chart)


def _loop_checks(conn, loop: np.ndarray, chart: Chart) -> list:
    cyc = GeodesicCycle([np.append(loop, loop[0])], [], chart)
    ids = []
    for loc, pid in conn.poles_in(chart):
        try:
            if winding_number(cyc, loc) != 0:
                ids.append(pid)
        except AmbiguousWindingError:
            return []
    return [residue_condition_report(conn, ids).to_json()]


def _coverage(traces: list[GeodesicTrace], opts: OmegaOptions):
    """Fractions of grid cells reached by each trace relative to the longest."""
    longest = traces[-1]
    cells = [set() for _ in traces]
    for chart in (Chart.Z, Chart.W):
        pts_all = longest.z[longest.chart == chart.value].astype(complex)
        if pts_all.size == 0:
            continue
        x0, x1 = pts_all.real.min(), pts_all.real.max()
        y0, y1 = pts_all.imag.min(), pts_all.imag.max()
        sx = (x1 - x0) / opts.grid or 1.0
        sy = (y1 - y0) / opts.grid or 1.0
        for k, tr in enumerate(traces):
            p = tr.z[tr.chart == chart.value].astype(complex)
            ix = np.clip(((p.real - x0) / sx).astype(int), 0, opts.grid - 1)
            iy = np.clip(((p.imag - y0) / sy).astype(int), 0, opts.grid - 1)
            cells[k].update(zip([chart.value] * p.size, ix.tolist(), iy.tolist()))
    reach = len(cells[-1])
    return [len(c) / reach if reach else 0.0 for c in cells], reach


def classify_omega(conn: SphereConnection, tr: GeodesicTrace,
                   opts: OmegaOptions | None = None) -> OmegaVerdict:
    """Run the decision cascade on a finished trace.

    The order is: pole limit, closure, repeated self-crossing, convergence
    of section returns (limit cycle or boundary graph), grid coverage
    (dense), and otherwise unresolved.
    """
    opts = opts or OmegaOptions()
    ev = tr.event
    if ev.kind is EventKind.POLE_APPROACH:
        return OmegaVerdict.pole_limit(ev.pole, t=float(ev.t))
    if ev.kind is EventKind.BREAKDOWN:
        hit = _pole_capture(conn, tr, opts)
        if hit is not None:
            return OmegaVerdict.pole_limit(hit[0], t=float(ev.t), distance=hit[1],
                                           note="step size underflow while approaching the pole")

    report = detect_closure(tr, opts.closure_tol, opts.closure_angle_tol)
    if report.closed:
        evidence, checks = _closure_checks(conn, tr, report)
        v = OmegaVerdict.closed(report.periodic, **evidence)
        v.residue_checks = checks
        return v

    if ev.kind is not EventKind.HORIZON:
        return OmegaVerdict.unresolved(event=ev.kind.value, t=float(ev.t))

    # longer horizons
    traces = [tr]
    horizon = tr.duration
    for _ in range(opts.doublings):
        horizon *= 2
        longer = _extend(conn, tr, horizon, opts)
        traces.append(longer)
        if longer.event.kind is not EventKind.HORIZON:
            break
    last = traces[-1]
    if last.event.kind is EventKind.POLE_APPROACH:
        return OmegaVerdict.pole_limit(last.event.pole, t=float(last.event.t), horizon=horizon)
    if last.event.kind is EventKind.CLOSURE:
        rep = detect_closure(last, opts.closure_tol, opts.closure_angle_tol)
        if rep.closed:
            evidence, checks = _closure_checks(conn, last, rep)
            v = OmegaVerdict.closed(rep.periodic, **evidence)
            v.residue_checks = checks
            return v

    counts = [len(self_intersections(x)) for x in traces[:2]]
    if len(counts) == 2 and counts[1] >= opts.min_crossings and counts[1] > counts[0]:
        return OmegaVerdict.self_intersecting(counts[1], counts=counts,
                                              horizons=[x.duration for x in traces[:2]])

    slow = _asymptotic_pole(conn, last, opts)
    if slow is not None:
        return OmegaVerdict.pole_limit(slow[0], asymptotic=True, horizon=last.duration,
                                       distance_mid=slow[1], distance_end=slow[2])

    rec = _recurrence(conn, last, opts)
    if rec is not None:
        evidence, loop, chart = rec
        if evidence["median_ratio"] <= opts.geometric_ratio \
                and evidence["loop_pole_distance"] > opts.graph_radius:
            v = OmegaVerdict.limit_cycle(**evidence)
            v.residue_checks = _loop_checks(conn, loop, chart)
            return v
        if evidence["loop_pole_distance"] <= opts.graph_radius:
            return OmegaVerdict.boundary_graph(**evidence)

    if len(traces) >= 3:
        fractions, reach = _coverage(traces, opts)
        area = reach / (2 * opts.grid * opts.grid)
        if fractions[-3] >= opts.coverage and fractions[-2] >= opts.coverage \
                and reach >= opts.min_area_fraction * opts.grid * opts.grid:
            return OmegaVerdict.dense(coverage=fractions, reachable_cells=reach,
                                      area_fraction=area)

    return OmegaVerdict.unresolved(crossings=counts, horizon=last.duration)
