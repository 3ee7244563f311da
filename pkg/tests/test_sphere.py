"""Charts, the induced form at infinity and the residue sum."""
import numpy as np
import pytest

from merogeo.checks import random_form
from merogeo.rational import RationalForm
from merogeo.sphere import (INFINITY, Chart, ChartPoint, ChartSwitchError, SphereConnection,
                            induce_w_form, residue_at_infinity, residue_sum_report,
                            to_other_chart)


def form(src):
    return SphereConnection.from_source(src)


@pytest.mark.parametrize("src, expected", [
    ("0", RationalForm.make([-2], [0, 1])),
    ("-2/z", RationalForm.make([0], [1])),
    ("-1/z", RationalForm.make([-1], [0, 1])),
])
def test_induced_w_form_examples(src, expected):
    assert form(src).form_w.max_coeff_error(expected) < 1e-12


@pytest.mark.parametrize("src, res_inf", [
    ("0", -2), ("-2/z", 0), ("(-1/2)/(z-1) + (-1/2)/(z+1)", -1), ("3/(z-2)", -5),
])
def test_residue_at_infinity_examples(src, res_inf):
    conn = form(src)
    assert abs(residue_at_infinity(conn) - res_inf) < 1e-10
    total, defect = residue_sum_report(conn)
    assert defect < 1e-9


def test_zero_form_sum_is_exact():
    total, defect = residue_sum_report(form("0"))
    assert total == -2 and defect == 0


def test_transform_applied_twice_is_identity(rng):
    for _ in range(30):
        f = random_form(rng)
        back = induce_w_form(induce_w_form(f))
        assert f.max_coeff_error(back) < 1e-9


def test_w_form_matches_substitution(rng):
    f = random_form(rng)
    fw = induce_w_form(f)
    for w in (0.7 + 0.2j, -1.1j, 1.9):
        assert abs(fw(w) - (-f(1 / w) / w ** 2 - 2 / w)) < 1e-9 * max(1, abs(fw(w)))


def test_residue_sum_random_connections(rng):
    for _ in range(100):
        _, defect = residue_sum_report(SphereConnection.from_form(random_form(rng)))
        assert defect < 1e-9


def test_chart_invariance_of_residues(rng):
    checked = 0
    for _ in range(30):
        conn = SphereConnection.from_form(random_form(rng, r_min=0.5, r_max=2.0))
        for k, e in enumerate(conn.catalog_z):
            if 0.5 < abs(e.location) < 2:
                assert abs(e.residue - conn.residue_in_w_chart(k)) < 1e-9
                checked += 1
    assert checked > 30


@pytest.mark.parametrize("src, dst", [
    (ChartPoint(Chart.Z, 2, 1), ChartPoint(Chart.W, 0.5, -0.25)),
    (ChartPoint(Chart.W, 0.5, -0.25), ChartPoint(Chart.Z, 2, 1)),
    (ChartPoint(Chart.Z, 1j, 1), ChartPoint(Chart.W, -1j, 1)),
])
def test_chart_switch_examples(src, dst):
    got = to_other_chart(src)
    assert got.chart is dst.chart
    assert abs(got.position - dst.position) < 1e-15
    assert abs(got.velocity - dst.velocity) < 1e-15


def test_chart_switch_at_origin_fails():
    with pytest.raises(ChartSwitchError):
        to_other_chart(ChartPoint(Chart.Z, 0, 1))


def test_poles_in_w_chart_include_infinity():
    conn = form("3/(z-2)")
    w_poles = dict((pid, loc) for loc, pid in conn.poles_in(Chart.W))
    assert INFINITY in w_poles and w_poles[INFINITY] == 0
    assert abs(w_poles[0] - 0.5) < 1e-14
    assert conn.pole_ids() == [0, INFINITY]


def test_catalog_json_shape():
    data = form("3/(z-2)").catalog_json()
    assert data["infinity"]["order"] == 1
    assert abs(data["infinity"]["res_re"] + 5) < 1e-10
