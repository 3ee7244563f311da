"""Geodesics of holomorphic connections ``a dz`` on a complex torus.

The torus is ``C / (Z + lam Z)`` with ``Im lam > 0``.  A holomorphic
connection is a constant multiple of ``dz``, and its geodesics lift to

    s(t) = z0 + log(1 + a v0 t) / a,      s'(t) = v0 / (1 + a v0 t),

with the logarithm continued along the ray ``1 + a v0 t`` from ``log 1 = 0``.
For ``a = 0`` the geodesics are straight lines.  Whether a geodesic closes,
spirals onto a closed geodesic or fills the torus depends only on whether
``conj(a)`` (or ``v0`` when ``a = 0``) points in a lattice direction.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .integrate import EventKind, GeodesicTrace, TerminalEvent

__all__ = [
    "TorusSpec",
    "TorusVerdict",
    "OutsideIntervalError",
    "torus_point",
    "torus_velocity",
    "torus_max_interval",
    "lattice_direction",
    "classify_torus",
    "project_to_fundamental",
    "lattice_coordinates",
    "return_time",
    "asymptotic_line",
    "torus_trace",
]

MAX_DEN = 10**6
DIRECTION_TOL = 1e-9
# largest argument increment between unwrapping samples along the ray
_ARG_STEP = 0.1


class OutsideIntervalError(ValueError):
    """Time outside the maximal interval of definition of the geodesic."""


@dataclass(frozen=True)
class TorusSpec:
    lam: complex
    a: complex
    z0: complex
    v0: complex

    def __post_init__(self):
        if not complex(self.lam).imag > 0:
            raise ValueError("lattice parameter needs Im(lam) > 0")
        if complex(self.v0) == 0:
            raise ValueError("initial velocity must be nonzero")

    @property
    def q(self) -> complex:
        return complex(self.a) * complex(self.v0)

    def to_json(self) -> dict:
        return {k: [complex(x).real, complex(x).imag]
                for k, x in (("lambda", self.lam), ("a", self.a), ("z0", self.z0), ("v0", self.v0))}


def _is_real(x: complex, tol: float = 0.0) -> bool:
    return abs(x.imag) <= tol * abs(x)


def torus_max_interval(spec: TorusSpec) -> tuple[float, float]:
    """Maximal time interval ``(t_minus, t_plus)`` of the geodesic."""
    q = spec.q
    if q == 0 or q.imag != 0:
        return -math.inf, math.inf
    if q.real > 0:
        return -1.0 / q.real, math.inf
    return -math.inf, -1.0 / q.real


def _check_time(spec: TorusSpec, t: float) -> None:
    lo, hi = torus_max_interval(spec)
    if not lo < t < hi:
        raise OutsideIntervalError(f"t = {t} outside the maximal interval ({lo}, {hi})")


def _ray_log(q: complex, t: float) -> complex:
    """``log(1 + q t)`` continued along the segment from 1.

    The argument is tracked on samples of the segment whose arguments differ
    by at most a tenth of a radian and unwrapped.
    """
    end = 1 + q * t
    total = abs(cmath.phase(end))  # turning seen from 0 along a straight segment
    n = max(2, int(math.ceil(total / _ARG_STEP)) + 1)
    s = np.linspace(0.0, t, n)
    args = np.unwrap(np.angle(1 + q * s))
    return complex(math.log(abs(end)), float(args[-1]))


def torus_point(spec: TorusSpec, t: float) -> complex:
    """Lift of the geodesic at time ``t``."""
    t = float(t)
    _check_time(spec, t)
    z0, v0, a = complex(spec.z0), complex(spec.v0), complex(spec.a)
    if a == 0:
        return z0 + v0 * t
    return z0 + _ray_log(spec.q, t) / a


def torus_velocity(spec: TorusSpec, t: float) -> complex:
    t = float(t)
    _check_time(spec, t)
    return complex(spec.v0) / (1 + spec.q * t)


def lattice_coordinates(z: complex, lam: complex) -> tuple[float, float]:
    """Real ``(alpha, beta)`` with ``z = alpha + beta * lam``."""
    z, lam = complex(z), complex(lam)
    beta = z.imag / lam.imag
    return z.real - beta * lam.real, beta


def project_to_fundamental(z: complex, lam: complex) -> complex:
    """Representative of ``z`` with lattice coordinates in ``[0, 1)``."""
    alpha, beta = lattice_coordinates(z, lam)
    alpha, beta = alpha % 1.0, beta % 1.0
    # values a rounding error below 1 wrap to 0
    if alpha > 1 - 1e-12:
        alpha = 0.0
    if beta > 1 - 1e-12:
        beta = 0.0
    return alpha + beta * complex(lam)


def _convergents(x: float, max_den: int):
    """Continued-fraction convergents ``p/q`` of ``x`` with ``q <= max_den``."""
    p0, q0, p1, q1 = 0, 1, 1, 0
    frac = x
    for _ in range(64):
        a = math.floor(frac)
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        if q1 > max_den:
            return
        yield p1, q1
        rest = frac - a
        if rest <= 1e-300:
            return
        frac = 1.0 / rest


def lattice_direction(d: complex, lam: complex, max_den: int = MAX_DEN,
                      tol: float = DIRECTION_TOL):
    """Coprime ``(m, n)`` with ``d`` a positive multiple of ``m + n*lam``.

    With ``d = alpha + beta*lam`` the smaller of the two coordinates is
    divided by the larger, giving a ratio ``x`` in ``[-1, 1]``.  We accept
    the first continued-fraction convergent ``p/q`` with ``q <= max_den``
    and ``|q*x - p| <= tol``.  Returns ``None`` when there is none, so
    ``None`` means "irrational up to this resolution".
    """
    d = complex(d)
    if d == 0:
        raise ValueError("direction must be nonzero")
    alpha, beta = lattice_coordinates(d, lam)
    swap = abs(beta) > abs(alpha)
    big, small = (beta, alpha) if swap else (alpha, beta)
    x = small / big
    for p, q in _convergents(x, max_den):
        if abs(q * x - p) <= tol:
            sign = 1 if big > 0 else -1
            m, n = (sign * p, sign * q) if swap else (sign * q, sign * p)
            g = math.gcd(m, n)
            return m // g, n // g
    return None


@dataclass
class TorusVerdict:
    tag: str
    line_direction: complex
    lattice_vector: tuple[int, int] | None = None
    evidence: dict = field(default_factory=dict)

    TAGS = ("ClosedPeriodic", "ClosedNonPeriodic", "LimitCycleLine", "Dense")

    def __post_init__(self):
        if self.tag not in self.TAGS:
            raise ValueError(f"unknown torus verdict {self.tag!r}")
        if (self.lattice_vector is None) != (self.tag == "Dense"):
            raise ValueError("lattice_vector is required exactly for the non-dense verdicts")

    def to_json(self) -> dict:
        out = {"tag": self.tag,
               "line_direction": [self.line_direction.real + 0.0, self.line_direction.imag + 0.0]}
        if self.lattice_vector is not None:
            out["lattice_vector"] = list(self.lattice_vector)
        out["evidence"] = self.evidence
        out["residue_checks"] = []
        return out


def asymptotic_line(spec: TorusSpec) -> tuple[complex, complex]:
    """Direction and offset of the line the lift approaches as ``t -> +inf``.

    For ``a != 0`` and ``a v0`` not real, the continued argument of
    ``1 + a v0 t`` tends to ``Arg(a v0)`` and the lift approaches
    ``conj(a) s + b`` with ``b = z0 + i Arg(a v0) conj(a) / |a|**2``.
    """
    a = complex(spec.a)
    if a == 0 or _is_real(spec.q):
        raise ValueError("the lift is itself a line")
    theta = cmath.phase(spec.q)
    b = complex(spec.z0) + 1j * theta * a.conjugate() / abs(a) ** 2
    return a.conjugate(), b


def return_time(spec: TorusSpec, vector: tuple[int, int], min_change: float = 0.1):
    """Time of a return to the start along ``m + n*lam``, with its velocity.

    Only meaningful when the lift is a line along the lattice vector
    ``L = m + n*lam`` (``a L`` real).  The returns happen where
    ``log(1 + a v0 t) = k a L``; the smallest ``k > 0`` (or, failing that,
    ``k < 0``) whose velocity differs from ``v0`` by more than
    ``min_change * |v0|`` is returned when ``a != 0``.
    """
    a, v0 = complex(spec.a), complex(spec.v0)
    lat = vector[0] + vector[1] * complex(spec.lam)
    if a == 0:
        t = (lat / v0).real
        return abs(t), v0
    al = (a * lat).real
    lo, hi = torus_max_interval(spec)
    found = []
    for k in range(1, 50):
        for kk in (k, -k):
            t = (math.exp(kk * al) - 1) / spec.q.real
            v = v0 / (1 + spec.q * t)
            if lo < t < hi and abs(v - v0) > min_change * abs(v0):
                found.append((t <= 0, k, t, v))
        if found:
            break
    if not found:
        raise ValueError("no return time found")
    _, _, t, v = min(found)
    return t, v


def classify_torus(spec: TorusSpec, max_den: int = MAX_DEN,
                   tol: float = DIRECTION_TOL) -> TorusVerdict:
    """Closed (periodic or not), limit line, or dense."""
    a, v0 = complex(spec.a), complex(spec.v0)
    resolution = {"max_den": max_den, "tol": tol}
    if a == 0:
        vec = lattice_direction(v0, spec.lam, max_den, tol)
        if vec is None:
            return TorusVerdict("Dense", v0, None, {"resolution": resolution})
        return TorusVerdict("ClosedPeriodic", v0, vec, {})
    d = a.conjugate()
    vec = lattice_direction(d, spec.lam, max_den, tol)
    if vec is None:
        return TorusVerdict("Dense", d, None, {"resolution": resolution})
    ratio = v0 / d
    if _is_real(ratio, tol):
        ev = {}
        try:
            t, v = return_time(spec, vec)
            ev = {"return_time": t, "return_velocity": [v.real, v.imag]}
        except ValueError:
            pass
        return TorusVerdict("ClosedNonPeriodic", d, vec, ev)
    direction, offset = asymptotic_line(spec)
    return TorusVerdict("LimitCycleLine", d, vec,
                        {"asymptotic_offset": [offset.real, offset.imag]})


def torus_trace(spec: TorusSpec, t_end: float, spacing: float = 0.05) -> GeodesicTrace:
    """Exact samples of the lift on ``[0, t_end]``, at most ``spacing`` apart.

    The result is a :class:`GeodesicTrace` with ``lattice`` set, so the
    closure and crossing tools compare positions modulo the lattice.
    """
    lo, hi = torus_max_interval(spec)
    end = min(float(t_end), hi)
    event = EventKind.HORIZON
    if end < t_end:
        end = hi - 1e-9 * max(1.0, abs(hi))
        event = EventKind.ESCAPE
    ts = [0.0]
    t = 0.0
    while t < end:
        speed = abs(torus_velocity(spec, t))
        t = min(end, t + spacing / speed)
        ts.append(t)
    ts = np.array(ts)
    z = np.array([torus_point(spec, x) for x in ts])
    v = np.array([torus_velocity(spec, x) for x in ts])
    n = ts.size
    # the primitive of a dz along the lift, so exp(u) v stays equal to v0
    u = complex(spec.a) * (z - complex(spec.z0))
    return GeodesicTrace(
        t=ts, chart=np.array(["Z"] * n), z=z, v=v, u=u,
        c=np.full(n, complex(spec.v0)), event=TerminalEvent(event, float(ts[-1])), max_invariant_drift=0.0,
        lattice=complex(spec.lam))
