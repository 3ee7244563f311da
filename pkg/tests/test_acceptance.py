"""The eight acceptance criteria, each checked against an independent oracle.

Every test prints one ``PASS``/``FAIL`` line (with the measured quantity and
the wall time) straight to the terminal, then asserts.
"""
import cmath
import json
import math
import time

import numpy as np
import pytest

from merogeo.classify import (classify_omega, cycle_from_closed_trace, detect_closure,
                              gauss_bonnet_defect, polyline_crossings)
from merogeo.cli import main
from merogeo.integrate import EventKind, TraceOptions, reverse_trace, trace
from merogeo.rational import RationalForm
from merogeo.sphere import SphereConnection, residue_sum_report
from merogeo.torus import (TorusSpec, classify_torus, project_to_fundamental, return_time,
                           torus_max_interval, torus_point, torus_velocity)

SEED = 20240611


@pytest.fixture
def report(capsys):
    start = time.perf_counter()

    def emit(k, ok, detail):
        with capsys.disabled():
            elapsed = time.perf_counter() - start
            print(f"\n[acceptance {k}] {'PASS' if ok else 'FAIL'} {detail} ({elapsed:.2f} s)")
        assert ok, detail
        # desk-scale budget per criterion
        assert elapsed < 10.0
    return emit


def separated_roots(rng, n, sep, r_lo, r_hi):
    roots = []
    while len(roots) < n:
        r = rng.uniform(r_lo, r_hi)
        p = r * cmath.exp(2j * math.pi * rng.uniform())
        if all(abs(p - q) >= sep for q in roots):
            roots.append(p)
    return roots


def form_with_roots(rng, roots):
    den = np.poly(roots)[::-1]  # ascending
    n = int(rng.integers(0, len(roots) + 3))
    num = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
    return RationalForm.make(num, den)


# 1 -------------------------------------------------------------------------

def test_residue_theorem(report):
    rng = np.random.default_rng(SEED + 1)
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 9))
        f = form_with_roots(rng, separated_roots(rng, d, 0.1, 0.0, 2.0))
        total, defect = residue_sum_report(SphereConnection.from_form(f))
        worst = max(worst, defect, abs(total + 2))
    report(1, worst < 1e-9, f"residue sum = -2 on 100 random forms, worst defect {worst:.2e} < 1e-9")


# 2 -------------------------------------------------------------------------

def test_chart_invariance(report):
    rng = np.random.default_rng(SEED + 2)
    worst, compared = 0.0, 0
    for _ in range(50):
        d = int(rng.integers(1, 9))
        conn = SphereConnection.from_form(form_with_roots(rng, separated_roots(rng, d, 0.1, 0.5, 2.0)))
        for k, e in enumerate(conn.catalog_z):
            if 0.5 < abs(e.location) < 2:
                worst = max(worst, abs(e.residue - conn.residue_in_w_chart(k)))
                compared += 1
    report(2, worst < 1e-9 and compared >= 50,
           f"z vs w chart residues on {compared} poles in 50 cases, worst {worst:.2e} < 1e-9")


# 3 -------------------------------------------------------------------------

def continued_power(base, expo, start):
    """``base ** expo`` along a densely sampled path, continued from ``start``."""
    arg = np.unwrap(np.angle(base))
    val = np.exp(expo * (np.log(np.abs(base)) + 1j * arg))
    # whole-turn branch offset that matches the initial point
    shifts = [val[0] * cmath.exp(2j * math.pi * k * expo) for k in range(-8, 9)]
    k = int(np.argmin([abs(s - start) for s in shifts])) - 8
    return val * cmath.exp(2j * math.pi * k * expo)


def exact_path(kind, p, z0, v0, t):
    """Closed-form geodesic on a dense grid ``t`` (starting at 0, either sign)."""
    if kind == "zero":
        return z0 + v0 * t
    if kind == "const":
        w = 1 + p * v0 * t
        return z0 + (np.log(np.abs(w)) + 1j * np.unwrap(np.angle(w))) / p
    if p == -1:
        return z0 * np.exp(v0 / z0 * t)
    e = p + 1
    base = z0 ** e + e * z0 ** p * v0 * t
    return continued_power(base, 1 / e, z0)


def oracle_cases(rng, n):
    kinds = ["zero", "const", "rho"]
    grid = np.linspace(0, 10, 20001)
    out = []
    while len(out) < n:
        kind = kinds[len(out) % 3]
        z0 = complex(*rng.uniform(-1.5, 1.5, 2))
        v0 = 0.5 * complex(*rng.normal(size=2))
        p = {"zero": 0, "const": complex(*rng.uniform(-1, 1, 2)),
             "rho": float(np.round(rng.uniform(-3, 2), 2))}[kind]
        if abs(z0) < 0.3 or abs(v0) < 0.1:
            continue
        paths = [exact_path(kind, p, z0, v0, grid), exact_path(kind, p, z0, -v0, grid)]
        far = max(np.max(np.abs(z)) for z in paths)
        near = min(np.min(np.abs(z)) for z in paths)
        if far > 50 or (kind == "rho" and near < 0.3):
            continue
        if kind == "const" and min(np.min(np.abs(1 + p * s * v0 * grid)) for s in (1, -1)) < 0.3:
            continue
        out.append((kind, p, z0, v0))
    return out


def source(kind, p):
    if kind == "zero":
        return "0"
    if kind == "const":
        return f"({p.real!r} + {p.imag!r}*i)"
    return f"{p!r}/z"


def test_oracle_equivalence(report):
    rng = np.random.default_rng(SEED + 3)
    worst_err = worst_drift = 0.0
    for kind, p, z0, v0 in oracle_cases(rng, 30):
        conn = SphereConnection.from_source(source(kind, p))
        # negative times are covered by the reversed geodesic s -> sigma(-s)
        for sign in (1, -1):
            tr = trace(conn, z0, sign * v0, 10.0)
            assert tr.event.kind is EventKind.HORIZON
            dense = np.union1d(np.linspace(0, 10, 20001), tr.t)
            exact = exact_path(kind, p, z0, sign * v0, dense)
            ref = exact[np.searchsorted(dense, tr.t)]
            worst_err = max(worst_err, float(np.max(np.abs(tr.positions_z() - ref))))
            worst_drift = max(worst_drift, tr.max_invariant_drift)
    ok = worst_err < 1e-8 and worst_drift < 1e-8
    report(3, ok, f"30 oracle geodesics on |t| <= 10: max error {worst_err:.2e}, "
                  f"max drift {worst_drift:.2e} (both < 1e-8)")


# 4 -------------------------------------------------------------------------

def random_torus(rng):
    return TorusSpec(complex(rng.uniform(-1, 1), rng.uniform(0.3, 2)), complex(*rng.normal(size=2)),
                     complex(*rng.normal(size=2)), complex(*rng.normal(size=2)))


def test_torus_formulas(report):
    rng = np.random.default_rng(SEED + 4)
    worst_fd = 0.0
    for _ in range(100):
        s = random_torus(rng)
        lo, hi = torus_max_interval(s)
        t = float(rng.uniform(max(lo, -3.0), min(hi, 3.0)))
        # keep the stencil away from the endpoint singularity
        t = min(max(t, lo + 0.2), hi - 0.2) if math.isfinite(lo) or math.isfinite(hi) else t
        h = 1e-6
        fd = (torus_point(s, t + h) - torus_point(s, t - h)) / (2 * h)
        exact = torus_velocity(s, t)
        worst_fd = max(worst_fd, abs(fd - exact) / abs(exact))
    worst_lift, n_lift = 0.0, 0
    while n_lift < 10:
        s = TorusSpec(1j, 0.7 * complex(*rng.normal(size=2)), complex(*rng.uniform(-1, 1, 2)),
                      complex(*rng.normal(size=2)))
        ts = np.linspace(0, 5, 501)
        if np.min(np.abs(1 + s.q * ts)) < 0.3:
            continue
        conn = SphereConnection.from_source(f"({s.a.real!r} + {s.a.imag!r}*i)")
        tr = trace(conn, s.z0, s.v0, 5.0)
        lift = np.array([torus_point(s, float(t)) for t in tr.t])
        worst_lift = max(worst_lift, float(np.max(np.abs(tr.positions_z() - lift))))
        n_lift += 1
    ok = worst_fd < 1e-6 and worst_lift < 1e-8
    report(4, ok, f"finite differences on 100 specs: worst relative {worst_fd:.2e} < 1e-6; "
                  f"sphere integrator vs lift on 10 specs: {worst_lift:.2e} < 1e-8")


# 5 -------------------------------------------------------------------------

def test_closed_geodesic_criterion(report):
    circle = SphereConnection.from_source("-1/z")
    tr = trace(circle, 1, 1j, 50.0)
    verdict = classify_omega(circle, tr)
    rep = detect_closure(tr)
    period_err = abs(rep.length - 2 * math.pi)
    cyc = cycle_from_closed_trace(tr, rep)
    defect = gauss_bonnet_defect(circle, cyc, genus=0, m_f=1)
    spiral_conn = SphereConnection.from_source("(-1 + 0.05)/z")
    spiral = trace(spiral_conn, 1, 1j, 50.0)
    spiral_closed = spiral.event.kind is EventKind.CLOSURE or detect_closure(spiral).closed
    ok = (verdict.tag == "ClosedGeodesic" and verdict.periodic and period_err < 1e-6
          and defect < 1e-6 and not spiral_closed)
    report(5, ok, f"circle: {verdict.tag} periodic={verdict.periodic}, |l - 2pi| = {period_err:.2e}, "
                  f"Gauss-Bonnet defect {defect:.2e}; perturbed R closes: {spiral_closed}")


# 6 -------------------------------------------------------------------------

def test_torus_classification(report):
    cases = [(TorusSpec(1j, 0, 0, 1 + 1j), "ClosedPeriodic", (1, 1)),
             (TorusSpec(1j, 1, 0, 1), "ClosedNonPeriodic", (1, 0)),
             (TorusSpec(1j, 1, 0, 1j), "LimitCycleLine", (1, 0))]
    tags_ok = all(classify_torus(s).tag == tag and classify_torus(s).lattice_vector == vec
                  for s, tag, vec in cases)
    s = cases[1][0]
    t_ret, _ = return_time(s, (1, 0))
    # independent oracle: log(1 + t) = 1 at t = e - 1
    gap = abs(project_to_fundamental(torus_point(s, t_ret), s.lam) - project_to_fundamental(s.z0, s.lam))
    dv = abs(torus_velocity(s, t_ret) - s.v0)
    ok = tags_ok and abs(t_ret - (math.e - 1)) < 1e-12 and gap < 1e-8 and dv > 0.1 * abs(s.v0)
    report(6, ok, f"three torus verdicts as tagged: {tags_ok}; return at t = {t_ret:.12f} "
                  f"with position gap {gap:.1e} < 1e-8 and |v - v0| = {dv:.3f}")


# 7 -------------------------------------------------------------------------

def brute_force_count(pts):
    a, b = pts[:-1], pts[1:]
    i, j = np.triu_indices(a.size, k=2)
    p1, p2, q1, q2 = a[i], b[i], a[j], b[j]

    def cross(x, y):
        return (np.conj(x) * y).imag
    hit = ((cross(q2 - q1, p1 - q1) * cross(q2 - q1, p2 - q1) < 0)
           & (cross(p2 - p1, q1 - p1) * cross(p2 - p1, q2 - p1) < 0))
    return int(np.count_nonzero(hit))


def test_self_intersection_brute_force(report):
    rng = np.random.default_rng(SEED + 7)
    mismatches, total = 0, 0
    for _ in range(20):
        n = int(rng.integers(10, 2001))
        step = float(rng.choice([0.02, 0.2, 1.0]))
        pts = np.cumsum(step * (rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)))
        fast = len(polyline_crossings(pts))
        slow = brute_force_count(pts)
        mismatches += fast != slow
        total += slow
    report(7, mismatches == 0,
           f"20 random polylines (<= 2000 segments, {total} crossings): {mismatches} count mismatches")


# 8 -------------------------------------------------------------------------

def test_reversal_and_determinism(report, capsys, tmp_path):
    worst = 0.0
    for src, z0, v0, t_end in (("0", 0.2, 0.1 + 0.1j, 3.0), ("1", 0, 1, 5.0), ("-1/z", 1, 1j, 3.0),
                               ("1/(z-0.5) - 2/(z+1)", 0.2 + 0.3j, 1, 4.0)):
        conn = SphereConnection.from_source(src)
        back = reverse_trace(conn, trace(conn, z0, v0, t_end))
        worst = max(worst, abs(complex(back.positions_z()[-1]) - z0))

    outputs = []
    for k in range(2):
        path = tmp_path / f"run{k}.json"
        main(["trace", "--form", "1/(z-0.5) - 2/(z+1)", "--z0", "0.2+0.3i", "--v0", "1",
              "--t", "20", "--out", str(path)])
        main(["classify", "--form", "-1/z", "--z0", "1", "--v0", "i"])
        main(["check", "--seed", "7", "--n", "2"])
        printed = capsys.readouterr().out
        outputs.append((printed, path.read_bytes()))
    identical = outputs[0] == outputs[1]
    json.loads(outputs[0][1])
    ok = worst < 1e-6 and identical
    report(8, ok, f"time reversal returns within {worst:.2e} < 1e-6; repeated runs byte-identical: "
                  f"{identical}")
