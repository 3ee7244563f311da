"""Closure detection on finished traces.

A geodesic closes at time ``l > 0`` when it comes back to its starting point
with its initial direction (the velocity is a positive multiple of the
initial one).  It is periodic when the velocity comes back unchanged.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from ..sphere import Chart
from ._interp import hermite, hermite_velocity

__all__ = ["ClosureReport", "detect_closure", "chart_view", "reduce_mod_lattice"]


@dataclass(frozen=True)
class ClosureReport:
    closed: bool
    periodic: bool = False
    length: float | None = None
    position_error: float | None = None
    angle_error: float | None = None
    # v(l) / v(0); real and positive for a closed geodesic
    velocity_ratio: complex | None = None

    def to_json(self) -> dict:
        out = {"closed": self.closed, "periodic": self.periodic}
        if self.closed:
            out.update(length=self.length, position_error=self.position_error,
                       angle_error=self.angle_error,
                       velocity_ratio=abs(self.velocity_ratio))
        return out


def reduce_mod_lattice(d: complex, lattice: complex) -> complex:
    """Representative of ``d`` modulo ``Z + lattice*Z`` closest to 0."""
    tau = complex(lattice)
    b = round(d.imag / tau.imag)
    d = d - b * tau
    a = round(d.real)
    d = d - a
    best = d
    for da in (-1, 0, 1):
        for db in (-1, 0, 1):
            cand = d - da - db * tau
            if abs(cand) < abs(best):
                best = cand
    return best


def chart_view(tr, chart: Chart | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Positions and velocities of every sample in a single chart.

    Defaults to the chart of the first sample.  Torus traces are returned
    unchanged.
    """
    if tr.lattice is not None:
        return tr.z.astype(complex), tr.v.astype(complex)
    chart = Chart(tr.chart[0]) if chart is None else chart
    z, v = tr.positions_z(), tr.velocities_z()
    if chart is Chart.Z:
        return z, v
    with np.errstate(divide="ignore", invalid="ignore"):
        return 1.0 / z, -v / (z * z)


def _bisect(z0, v0, z1, v1, dt, ref, shift, lo=0.0, hi=1.0, iters=60):
    def g(s):
        d = hermite(z0, v0, z1, v1, dt, s) - ref - shift
        return (d.conjugate() * hermite_velocity(z0, v0, z1, v1, dt, s)).real

    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return hi


def detect_closure(tr, tol: float = 1e-6, angle_tol: float = 1e-4) -> ClosureReport:
    """Earliest return of ``tr`` to its initial point and direction.

    Candidate returns are the sign changes from negative to positive of
    ``Re(conj(z - z0) z')``, located by bisection on the cubic Hermite
    interpolant between samples.  On a torus positions are compared modulo
    the lattice.
    """
    z, v = chart_view(tr)
    n = z.size
    if n < 3:
        return ClosureReport(False)
    z_ref, v_ref = complex(z[0]), complex(v[0])
    d = z - z_ref
    if tr.lattice is not None:
        red = np.array([reduce_mod_lattice(complex(x), tr.lattice) for x in d])
        shifts = d - red
        d = red
    else:
        shifts = np.zeros(n, dtype=complex)
    finite = np.isfinite(d) & np.isfinite(v)
    g = (np.conj(d) * v).real

    def verdict(pos, vel, length):
        err = abs(pos)
        ratio = vel / v_ref
        angle = abs(cmath.phase(ratio))
        if err < tol and angle < angle_tol:
            periodic = abs(vel - v_ref) < tol * max(1.0, abs(v_ref))
            return ClosureReport(True, periodic, float(length), float(err), float(angle),
                                 complex(ratio))
        return None

    t = tr.t
    for k in range(1, n - 1):
        if not (finite[k] and finite[k + 1] and g[k] < 0 <= g[k + 1]):
            continue
        if shifts[k] != shifts[k + 1]:
            continue
        step = abs(z[k + 1] - z[k])
        if min(abs(d[k]), abs(d[k + 1])) > step + tol:
            continue
        dt = t[k + 1] - t[k]
        s = _bisect(z[k], v[k], z[k + 1], v[k + 1], dt, z_ref, shifts[k])
        pos = hermite(z[k], v[k], z[k + 1], v[k + 1], dt, s) - z_ref - shifts[k]
        vel = hermite_velocity(z[k], v[k], z[k + 1], v[k + 1], dt, s)
        rep = verdict(complex(pos), complex(vel), t[k] + s * dt - t[0])
        if rep is not None:
            return rep
    # a trace stopped by online closure ends exactly on the return point
    if finite[-1]:
        rep = verdict(complex(d[-1]), complex(v[-1]), t[-1] - t[0])
        if rep is not None:
            return rep
    return ClosureReport(False)
