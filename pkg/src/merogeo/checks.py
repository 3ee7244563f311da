"""Randomized property suite behind ``merogeo check``.

Every case draws its data from its own seed, so a failing case can be
replayed alone with :func:`run_case`.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .integrate import TraceOptions, reverse_trace, trace
from .rational import RationalForm
from .sphere import SphereConnection, residue_sum_report

__all__ = [
    "PROPERTIES",
    "Thresholds",
    "CaseResult",
    "case_seed",
    "random_separated_roots",
    "random_form",
    "oracle_position",
    "run_case",
    "run_suite",
]

PROPERTIES = ("residue_sum", "chart_invariance", "oracle_traces", "time_reversal")


@dataclass(frozen=True)
class Thresholds:
    residue: float = 1e-9
    oracle: float = 1e-8
    drift: float = 1e-8
    reversal: float = 1e-6

    @classmethod
    def uniform(cls, tol: float) -> "Thresholds":
        return cls(tol, tol, tol, tol)


@dataclass
class CaseResult:
    prop: str
    seed: int
    ok: bool
    value: float
    detail: dict = field(default_factory=dict)


def case_seed(seed: int, prop: str, k: int) -> int:
    ss = np.random.SeedSequence([seed, PROPERTIES.index(prop), k])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def random_separated_roots(rng: np.random.Generator, n: int, min_sep: float = 0.1,
                           r_min: float = 0.0, r_max: float = 2.0) -> np.ndarray:
    """``n`` points in the annulus ``r_min < |z| < r_max``, pairwise ``min_sep`` apart."""
    pts: list[complex] = []
    while len(pts) < n:
        r = math.sqrt(rng.uniform(r_min ** 2, r_max ** 2))
        p = r * cmath.exp(1j * rng.uniform(0, 2 * math.pi))
        if r > r_min and all(abs(p - q) >= min_sep for q in pts):
            pts.append(p)
    return np.array(pts)


def random_form(rng: np.random.Generator, max_deg: int = 8, min_sep: float = 0.1,
                r_min: float = 0.0, r_max: float = 2.0) -> RationalForm:
    """Random ``N/D`` with ``D`` having simple, well separated roots."""
    d = int(rng.integers(1, max_deg + 1))
    roots = random_separated_roots(rng, d, min_sep, r_min, r_max)
    den = np.array([1.0 + 0j])
    for r in roots:
        den = np.convolve(den, [1.0, -r])
    n = int(rng.integers(0, d + 3))
    num = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
    # ascending coefficients
    return RationalForm.make(num, den[::-1])


def _ray_power(base0: complex, slope: complex, t: np.ndarray, expo: complex,
               log0: complex) -> np.ndarray:
    """``exp(expo * log(base0 + slope t))`` with the log continued from ``log0``."""
    grid = np.linspace(0.0, float(np.max(t)), 4001)
    arg_grid = np.unwrap(np.angle(base0 + slope * grid))
    arg_grid += log0.imag - arg_grid[0]
    w = base0 + slope * t
    # principal argument shifted by the whole turns of the continued one
    rough = np.interp(t, grid, arg_grid)
    arg = np.angle(w)
    arg += 2 * np.pi * np.round((rough - arg) / (2 * np.pi))
    return np.exp(expo * (np.log(np.abs(w)) + 1j * arg))


def oracle_position(kind: str, param: complex, z0: complex, v0: complex,
                    t: np.ndarray) -> np.ndarray:
    """Closed-form geodesics for ``R = 0``, ``R = a`` and ``R = rho/z``."""
    t = np.asarray(t, dtype=float)
    if kind == "zero" or (kind == "const" and param == 0):
        return z0 + v0 * t
    if kind == "const":
        a = complex(param)
        w = 1 + a * v0 * t
        return z0 + (np.log(np.abs(w)) + 1j * np.unwrap(np.angle(w))) / a
    if kind == "rho":
        rho = complex(param)
        if rho == -1:
            return z0 * np.exp(v0 * t / z0)
        e = rho + 1
        base0 = z0 ** e
        slope = e * z0 ** rho * v0
        log0 = e * cmath.log(z0)
        return _ray_power(base0, slope, t, 1 / e, log0)
    raise ValueError(f"unknown oracle {kind!r}")


def _oracle_case(rng: np.random.Generator):
    """Pick an oracle family and initial data keeping well clear of poles."""
    kind = ("zero", "const", "rho")[int(rng.integers(0, 3))]
    while True:
        z0 = complex(*rng.uniform(-1.5, 1.5, 2))
        v0 = complex(*rng.normal(size=2)) * 0.5
        if kind == "zero":
            param, src = 0j, "0"
        elif kind == "const":
            param = complex(*rng.uniform(-1, 1, 2))
            src = f"({param.real!r} + {param.imag!r}*i)"
        else:
            param = complex(round(float(rng.uniform(-3, 2)), 2))
            src = f"{param.real!r}/z"
        if abs(z0) < 0.3 or abs(v0) < 0.1:
            continue
        t = np.linspace(0.0, 10.0, 201)
        z = oracle_position(kind, param, z0, v0, t)
        if kind == "const" and np.min(np.abs(1 + param * v0 * t)) < 0.3:
            continue
        if kind == "rho" and (np.min(np.abs(z)) < 0.3 or np.max(np.abs(z)) > 50):
            continue
        if kind == "zero" and np.max(np.abs(z)) > 50:
            continue
        return kind, param, src, z0, v0


def run_case(prop: str, seed: int, th: Thresholds, opts: TraceOptions | None = None) -> CaseResult:
    rng = np.random.default_rng(seed)
    opts = opts or TraceOptions()
    if prop == "residue_sum":
        conn = SphereConnection.from_form(random_form(rng))
        _, defect = residue_sum_report(conn)
        return CaseResult(prop, seed, defect < th.residue, defect)
    if prop == "chart_invariance":
        f = random_form(rng, r_min=0.5, r_max=2.0)
        conn = SphereConnection.from_form(f)
        worst = 0.0
        for k, e in enumerate(conn.catalog_z):
            if 0.5 < abs(e.location) < 2:
                worst = max(worst, abs(e.residue - conn.residue_in_w_chart(k)))
        return CaseResult(prop, seed, worst < th.residue, worst)
    if prop in ("oracle_traces", "time_reversal"):
        kind, param, src, z0, v0 = _oracle_case(rng)
        conn = SphereConnection.from_source(src)
        if prop == "oracle_traces":
            tr = trace(conn, z0, v0, 10.0, opts)
            exact = oracle_position(kind, param, z0, v0, tr.t)
            err = float(np.max(np.abs(tr.positions_z() - exact)))
            ok = err < th.oracle and tr.max_invariant_drift < th.drift
            return CaseResult(prop, seed, ok, err,
                              {"kind": kind, "drift": tr.max_invariant_drift})
        t_end = float(rng.uniform(1.0, 5.0))
        fwd = trace(conn, z0, v0, t_end, opts)
        back = reverse_trace(conn, fwd, opts)
        err = abs(complex(back.positions_z()[-1]) - z0)
        return CaseResult(prop, seed, err < th.reversal, err, {"kind": kind})
    raise ValueError(f"unknown property {prop!r}")


def run_suite(seed: int, n_cases: int, th: Thresholds | None = None,
              opts: TraceOptions | None = None) -> dict[str, list[CaseResult]]:
    if n_cases < 1:
        raise ValueError("need at least one case per property")
    th = th or Thresholds()
    return {p: [run_case(p, case_seed(seed, p, k), th, opts) for k in range(n_cases)]
            for p in PROPERTIES}
