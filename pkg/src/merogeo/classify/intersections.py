"""Self-intersections of polylines and geodesic traces.

Segments are bucketed in a uniform spatial hash; only segments sharing a
cell are tested against each other.  Adjacent segments never count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._interp import hermite, hermite_velocity

__all__ = ["Crossing", "segment_crossing", "polyline_crossings", "self_intersections"]


@dataclass(frozen=True)
class Crossing:
    i: int
    j: int
    s: float  # fraction along segment i
    u: float  # fraction along segment j
    point: complex


def _cross(a: complex, b: complex) -> float:
    return (a.conjugate() * b).imag


def segment_crossing(p1: complex, p2: complex, q1: complex, q2: complex):
    """Fractions ``(s, u)`` of a proper crossing of ``p1p2`` and ``q1q2``.

    Touching and collinear configurations return ``None``.
    """
    d1 = _cross(q2 - q1, p1 - q1)
    d2 = _cross(q2 - q1, p2 - q1)
    if not (d1 < 0 < d2 or d2 < 0 < d1):
        return None
    d3 = _cross(p2 - p1, q1 - p1)
    d4 = _cross(p2 - p1, q2 - p1)
    if not (d3 < 0 < d4 or d4 < 0 < d3):
        return None
    return d1 / (d1 - d2), d3 / (d3 - d4)


def _candidate_pairs(points: np.ndarray, active: np.ndarray | None = None):
    a, b = points[:-1], points[1:]
    nseg = a.size
    if active is None:
        active = np.ones(nseg, dtype=bool)
    idx = np.flatnonzero(active)
    if idx.size < 2:
        return set()
    lengths = np.abs(b[idx] - a[idx])
    xs = np.concatenate([a[idx].real, b[idx].real])
    ys = np.concatenate([a[idx].imag, b[idx].imag])
    extent = max(xs.max() - xs.min(), ys.max() - ys.min(), 1e-300)
    cell = max(2.0 * float(np.median(lengths)), extent / 512.0, 1e-12)
    x0, y0 = xs.min(), ys.min()
    grid: dict[tuple[int, int], list[int]] = {}
    for k in idx:
        lo_x = int(math.floor((min(a[k].real, b[k].real) - x0) / cell))
        hi_x = int(math.floor((max(a[k].real, b[k].real) - x0) / cell))
        lo_y = int(math.floor((min(a[k].imag, b[k].imag) - y0) / cell))
        hi_y = int(math.floor((max(a[k].imag, b[k].imag) - y0) / cell))
        for gx in range(lo_x, hi_x + 1):
            for gy in range(lo_y, hi_y + 1):
                grid.setdefault((gx, gy), []).append(int(k))
    pairs = set()
    for members in grid.values():
        m = len(members)
        for x in range(m):
            for y in range(x + 1, m):
                i, j = members[x], members[y]
                if i > j:
                    i, j = j, i
                if j - i >= 2:
                    pairs.add((i, j))
    return pairs


def polyline_crossings(points, closed: bool = False,
                       active: np.ndarray | None = None) -> list[Crossing]:
    """All proper crossings between non-adjacent segments of a polyline.

    ``active`` optionally masks which segments take part.  With ``closed``
    the last point is assumed equal to the first, so the first and last
    segments are adjacent too.
    """
    pts = np.asarray(points, dtype=complex)
    if pts.size < 4:
        return []
    nseg = pts.size - 1
    out = []
    for i, j in sorted(_candidate_pairs(pts, active)):
        if closed and i == 0 and j == nseg - 1:
            continue
        hit = segment_crossing(complex(pts[i]), complex(pts[i + 1]),
                               complex(pts[j]), complex(pts[j + 1]))
        if hit is None:
            continue
        s, u = hit
        out.append(Crossing(i, j, s, u, complex(pts[i] + s * (pts[i + 1] - pts[i]))))
    return out


def _refine(z, v, t, i, j, s, u, tol=1e-9, iters=30):
    """Newton on the pair of Hermite arcs through segments ``i`` and ``j``."""
    dti, dtj = t[i + 1] - t[i], t[j + 1] - t[j]
    ai = (z[i], v[i], z[i + 1], v[i + 1], dti)
    aj = (z[j], v[j], z[j + 1], v[j + 1], dtj)
    for _ in range(iters):
        f = hermite(*ai, s) - hermite(*aj, u)
        if abs(f) < 0.1 * tol:
            break
        di = hermite_velocity(*ai, s) * dti
        dj = -hermite_velocity(*aj, u) * dtj
        det = di.real * dj.imag - dj.real * di.imag
        if det == 0:
            break
        ds = (f.real * dj.imag - dj.real * f.imag) / det
        du = (di.real * f.imag - f.real * di.imag) / det
        s, u = s - ds, u - du
        if not (-0.5 < s < 1.5 and -0.5 < u < 1.5):
            return None
    point = hermite(*ai, s)
    return s, u, point


def self_intersections(tr, refine: bool = True) -> list[tuple[float, float, complex]]:
    """Transversal self-crossings ``(t1, t2, point)`` of a trace, ``t1 < t2``.

    Segments are tested in the ``z`` chart when they reach into ``|z| <= 1.25``
    and in the ``w = 1/z`` chart when they reach into ``|w| <= 1.25``.  A
    crossing is kept only by the chart whose unit disc contains it, so none is
    counted twice.
    Points are reported in the standard chart.  Torus traces (``lattice``
    set) are handled as plain polylines of the lift.
    """
    if len(tr) < 4:
        return []
    if tr.lattice is not None:
        views = [(tr.z.astype(complex), tr.v.astype(complex), None)]
    else:
        zz = tr.positions_z()
        vz = tr.velocities_z()
        with np.errstate(divide="ignore", invalid="ignore"):
            ww = 1.0 / zz
            vw = -vz / (zz * zz)
        end_mod = np.minimum(np.abs(zz[:-1]), np.abs(zz[1:]))
        end_mod_w = np.minimum(np.abs(ww[:-1]), np.abs(ww[1:]))
        views = [(zz, vz, end_mod <= 1.25), (ww, vw, end_mod_w <= 1.25)]
    t = tr.t
    out = []
    for k, (z, v, active) in enumerate(views):
        finite = np.isfinite(z[:-1]) & np.isfinite(z[1:])
        act = finite if active is None else (active & finite)
        for c in polyline_crossings(z, active=act):
            s, u, point = c.s, c.u, c.point
            if refine:
                r = _refine(z, v, t, c.i, c.j, s, u)
                if r is not None:
                    s, u, point = r
            if active is not None:
                # ownership: Z keeps |z| <= 1, W keeps |w| < 1
                if (k == 0 and abs(point) > 1.0) or (k == 1 and abs(point) >= 1.0):
                    continue
            t1 = t[c.i] + s * (t[c.i + 1] - t[c.i])
            t2 = t[c.j] + u * (t[c.j + 1] - t[c.j])
            pz = point if (active is None or k == 0) else 1.0 / point
            out.append((float(t1), float(t2), complex(pz)))
    out.sort()
    return out
