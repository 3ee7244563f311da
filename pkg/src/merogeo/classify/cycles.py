"""Geodesic cycles, external angles and the residue identities.

A geodesic cycle is a closed chain of geodesic segments.  At each vertex
the curve turns by its external angle.  When the cycle bounds a disc-like
region in one chart, the sum of the external angles is fixed by the
residues of the poles it encloses:

    sum(eps_j) = 2*pi * (2 - m_f - 2*g + sum(Re Res_p)).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from ..sphere import SWITCH_RADIUS, Chart, PoleId, SphereConnection
from .closure import ClosureReport, chart_view, detect_closure
from ._interp import hermite

__all__ = [
    "AngleDomainError",
    "AmbiguousWindingError",
    "CycleChartError",
    "GeodesicCycle",
    "ResidueConditionReport",
    "cycle_from_closed_trace",
    "cycle_from_segments",
    "enclosed_poles",
    "external_angle",
    "gauss_bonnet_defect",
    "gauss_bonnet_report",
    "residue_condition_report",
    "signed_area",
    "winding_number",
]

RESIDUE_TOL = 1e-9


class AngleDomainError(ValueError):
    """External angle requested for zero or antiparallel tangents."""


class AmbiguousWindingError(ValueError):
    def __init__(self, msg: str, poles=()):
        super().__init__(msg)
        self.poles = list(poles)


class CycleChartError(ValueError):
    """The cycle does not fit inside the switching disc of a single chart."""


def external_angle(v_in: complex, v_out: complex) -> float:
    """Principal argument of ``v_out / v_in``.

    >>> round(external_angle(1, 1j), 12) == round(math.pi / 2, 12)
    True
    """
    v_in, v_out = complex(v_in), complex(v_out)
    if v_in == 0 or v_out == 0:
        raise AngleDomainError("tangent vectors must be nonzero")
    # the product form makes external_angle(v, v) exactly zero
    ang = cmath.phase(v_out * v_in.conjugate())
    if abs(ang) >= math.pi - 1e-12:
        raise AngleDomainError("antiparallel tangents have no external angle")
    return ang


@dataclass
class GeodesicCycle:
    """A closed chain of geodesic segments in one chart.

    ``segments`` hold chart positions; consecutive segments share endpoints
    and the last one ends where the first begins.  ``vertices`` are
    ``(point, incoming velocity, outgoing velocity)``; vertex ``j`` sits at
    the start of segment ``j``.  A smooth closed geodesic is a single segment
    whose one vertex has parallel tangents.
    """

    segments: list[np.ndarray]
    vertices: list[tuple[complex, complex, complex]]
    chart: Chart = Chart.Z
    lattice: complex | None = None

    @property
    def points(self) -> np.ndarray:
        """The cycle as one closed polyline (first point repeated at the end)."""
        parts = [np.asarray(self.segments[0], dtype=complex)]
        for seg in self.segments[1:]:
            parts.append(np.asarray(seg, dtype=complex)[1:])
        pts = np.concatenate(parts)
        if pts[-1] != pts[0]:
            pts = np.append(pts, pts[0])
        return pts

    def external_angles(self) -> list[float]:
        return [external_angle(vi, vo) for _, vi, vo in self.vertices]

    def max_modulus(self) -> float:
        return float(np.max(np.abs(self.points)))


def cycle_from_closed_trace(tr, report: ClosureReport | None = None) -> GeodesicCycle:
    """One-segment cycle cut out of a trace at its closing time."""
    report = report or detect_closure(tr)
    if not report.closed:
        raise ValueError("trace does not close")
    z, v = chart_view(tr)
    t = tr.t - tr.t[0]
    length = report.length
    k = int(np.searchsorted(t, length, side="right")) - 1
    k = min(max(k, 0), z.size - 1)
    seg = list(z[: k + 1])
    if k + 1 < z.size and t[k] < length:
        dt = t[k + 1] - t[k]
        s = (length - t[k]) / dt
        seg.append(hermite(z[k], v[k], z[k + 1], v[k + 1], dt, s))
    seg[-1] = z[0]
    chart = Chart(tr.chart[0]) if tr.lattice is None else Chart.Z
    v_end = complex(v[0]) * report.velocity_ratio
    vertex = (complex(z[0]), v_end, complex(v[0]))
    return GeodesicCycle([np.asarray(seg, dtype=complex)], [vertex], chart, tr.lattice)


def cycle_from_segments(traces, chart: Chart = Chart.Z, gap_tol: float = 1e-6) -> GeodesicCycle:
    """Chain traced geodesic segments into a cycle.

    Each trace runs from one vertex to the next; the last must end at the
    start of the first.  Endpoint gaps larger than ``gap_tol`` are rejected.
    """
    segs, vels = [], []
    for tr in traces:
        z, v = chart_view(tr, chart)
        segs.append(np.asarray(z, dtype=complex))
        vels.append(np.asarray(v, dtype=complex))
    n = len(segs)
    if n == 0:
        raise ValueError("no segments")
    vertices = []
    for j in range(n):
        prev = (j - 1) % n
        gap = abs(segs[prev][-1] - segs[j][0])
        if gap > gap_tol:
            raise ValueError(f"segment {prev} ends {gap:.3g} away from the start of segment {j}")
        vertices.append((complex(segs[j][0]), complex(vels[prev][-1]), complex(vels[j][0])))
    return GeodesicCycle(segs, vertices, chart)


def _closed_points(cycle) -> np.ndarray:
    pts = cycle.points if isinstance(cycle, GeodesicCycle) else np.asarray(cycle, dtype=complex)
    if pts[-1] != pts[0]:
        pts = np.append(pts, pts[0])
    return pts


def signed_area(cycle) -> float:
    """Shoelace area; positive for counter-clockwise polylines."""
    pts = _closed_points(cycle)
    return 0.5 * float(np.sum((np.conj(pts[:-1]) * pts[1:]).imag))


def _distance_to_polyline(pts: np.ndarray, p: complex) -> float:
    a, b = pts[:-1], pts[1:]
    d = b - a
    dd = np.abs(d) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(dd > 0, ((np.conj(d) * (p - a)).real) / dd, 0.0)
    s = np.clip(s, 0.0, 1.0)
    return float(np.min(np.abs(a + s * d - p)))


def winding_number(cycle, p: complex) -> int:
    """Winding number of a closed polyline (or cycle) around ``p``.

    The signed angle increments seen from ``p`` are summed; the total must be
    within 0.1 turns of an integer.
    """
    pts = _closed_points(cycle)
    p = complex(p)
    scale = max(1.0, float(np.max(np.abs(pts))))
    if _distance_to_polyline(pts, p) <= 1e-12 * scale:
        raise AmbiguousWindingError(f"point {p} lies on the cycle")
    rel = pts - p
    turns = float(np.sum(np.angle(rel[1:] / rel[:-1]))) / (2 * math.pi)
    k = round(turns)
    if abs(turns - k) >= 0.1:
        raise AmbiguousWindingError(f"winding around {p} is ambiguous ({turns:.3f} turns)")
    return int(k)


def enclosed_poles(conn: SphereConnection, cycle: GeodesicCycle) -> list[tuple[PoleId, int]]:
    """Poles visible in the cycle's chart with nonzero winding number."""
    if cycle.max_modulus() >= SWITCH_RADIUS:
        raise CycleChartError("cycle leaves the disc |z| < 2 of its chart")
    out, bad = [], []
    for loc, pid in conn.poles_in(cycle.chart):
        try:
            w = winding_number(cycle, loc)
        except AmbiguousWindingError:
            bad.append(pid)
            continue
        if w:
            out.append((pid, w))
    if bad:
        raise AmbiguousWindingError(f"ambiguous winding around poles {bad}", bad)
    return out


def gauss_bonnet_report(conn: SphereConnection, cycle: GeodesicCycle, genus: int = 0,
                        m_f: int = 1) -> dict:
    """Both sides of the angle-sum identity for ``cycle``.

    The bounded side in the cycle's chart is the region; the angles are read
    with the orientation that keeps it on the left.
    """
    enclosed = enclosed_poles(conn, cycle)
    if enclosed:
        orient = 1 if enclosed[0][1] > 0 else -1
    else:
        orient = 1 if signed_area(cycle) >= 0 else -1
    angles = [orient * a for a in cycle.external_angles()]
    re_sum = sum(conn.residue(pid).real for pid, _ in enclosed)
    predicted = 2 * math.pi * (2 - m_f - 2 * genus + re_sum)
    total = float(sum(angles))
    return {
        "enclosed_poles": [pid for pid, _ in enclosed],
        "angles": angles,
        "angle_sum": total,
        "re_residue_sum": re_sum,
        "predicted": predicted,
        "defect": abs(total - predicted),
    }


def gauss_bonnet_defect(conn: SphereConnection, cycle: GeodesicCycle, genus: int = 0,
                        m_f: int = 1) -> float:
    return gauss_bonnet_report(conn, cycle, genus, m_f)["defect"]


@dataclass(frozen=True)
class ResidueConditionReport:
    poles: list
    genus: int
    re_sum: float
    target: float
    closed_condition: bool
    one_cycle_possible: bool
    two_cycle_possible: bool
    spike: dict = field(default_factory=dict)
    zero: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "poles": list(self.poles),
            "genus": self.genus,
            "re_sum": self.re_sum,
            "target": self.target,
            "closed_condition": self.closed_condition,
            "one_cycle_possible": self.one_cycle_possible,
            "two_cycle_possible": self.two_cycle_possible,
            "spike": [{"pole": k, "flag": v} for k, v in self.spike.items()],
            "zero": [{"pole": k, "flag": v} for k, v in self.zero.items()],
        }


def residue_condition_report(conn: SphereConnection | None, part_pole_ids, genus: int = 0,
                             residues=None) -> ResidueConditionReport:
    """Check the residue conditions for a part bounded by geodesics.

    ``part_pole_ids`` name poles of ``conn``; alternatively pass the residues
    directly through ``residues`` (then ``conn`` may be ``None``).  The
    closed-geodesic condition is ``sum Re Res = -1 + 2g``; a single
    disconnecting geodesic with one vertex needs the sum in
    ``(-3/2 + 2g, -1/2 + 2g)`` and a two-geodesic cycle needs it in
    ``(-2 + 2g, 2g)``.
    """
    ids = list(part_pole_ids)
    if residues is None:
        residues = [conn.residue(pid) for pid in ids]
    else:
        residues = [complex(r) for r in residues]
        if len(ids) != len(residues):
            ids = list(range(len(residues)))
    re = [r.real for r in residues]
    total = float(sum(re))
    target = -1.0 + 2 * genus
    return ResidueConditionReport(
        poles=ids,
        genus=genus,
        re_sum=total,
        target=target,
        closed_condition=abs(total - target) <= RESIDUE_TOL,
        one_cycle_possible=-1.5 + 2 * genus < total < -0.5 + 2 * genus,
        two_cycle_possible=-2.0 + 2 * genus < total < 2 * genus,
        spike={pid: abs(x + 0.5) <= RESIDUE_TOL for pid, x in zip(ids, re)},
        zero={pid: abs(x) <= RESIDUE_TOL for pid, x in zip(ids, re)},
    )
