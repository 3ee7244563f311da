"""Self-crossing detection against brute force and constructed curves."""
import math

import numpy as np
import pytest

from merogeo.classify import polyline_crossings, segment_crossing, self_intersections
from merogeo.integrate import EventKind, GeodesicTrace, TerminalEvent, TraceOptions, trace
from merogeo.sphere import SphereConnection


def brute_force(pts):
    """All proper crossings of non-adjacent segments, vectorised over pairs."""
    a, b = pts[:-1], pts[1:]
    n = a.size
    i, j = np.triu_indices(n, k=2)
    p1, p2, q1, q2 = a[i], b[i], a[j], b[j]

    def cross(x, y):
        return (np.conj(x) * y).imag

    d1 = cross(q2 - q1, p1 - q1)
    d2 = cross(q2 - q1, p2 - q1)
    d3 = cross(p2 - p1, q1 - p1)
    d4 = cross(p2 - p1, q2 - p1)
    hit = (d1 * d2 < 0) & (d3 * d4 < 0)
    return set(zip(i[hit].tolist(), j[hit].tolist()))


@pytest.mark.parametrize("n, step", [(50, 0.3), (500, 0.1), (2000, 0.05), (2000, 1.0)])
def test_agrees_with_brute_force(rng, n, step):
    for _ in range(3):
        pts = np.cumsum(step * (rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)))
        found = {(c.i, c.j) for c in polyline_crossings(pts)}
        assert found == brute_force(pts)


def test_segment_crossing_basic():
    s, u = segment_crossing(-1, 1, -1j, 1j)
    assert (s, u) == (0.5, 0.5)
    assert segment_crossing(0, 1, 1, 2j) is None  # shared endpoint
    assert segment_crossing(0, 1, 0.5, 2) is None  # collinear overlap


def figure_eight_trace(n=999):
    t = np.linspace(0, 2 * np.pi, n)
    z = np.cos(t) + 1j * np.sin(t) * np.cos(t)
    v = -np.sin(t) + 1j * np.cos(2 * t)
    k = t.size
    return GeodesicTrace(t=t, chart=np.array(["Z"] * k), z=z, v=v, u=np.zeros(k, complex),
                         c=v.copy(), event=TerminalEvent(EventKind.HORIZON, float(t[-1])),
                         max_invariant_drift=0.0)


def test_figure_eight_polyline():
    tr = figure_eight_trace()
    hits = polyline_crossings(tr.z, closed=True)
    assert len(hits) == 1
    assert abs(hits[0].point) < 1e-4


def test_figure_eight_refined():
    hits = self_intersections(figure_eight_trace())
    assert len(hits) == 1
    t1, t2, p = hits[0]
    assert abs(p) < 1e-9
    assert abs(t1 - math.pi / 2) < 1e-8 and abs(t2 - 3 * math.pi / 2) < 1e-8


def test_straight_line_has_none():
    tr = trace(SphereConnection.from_source("0"), -1 - 1j, 1 + 0.7j, 8.0)
    assert self_intersections(tr) == []


def test_circle_arc_has_none(circle_conn):
    tr = trace(circle_conn, 1, 1j, 2 * math.pi - 0.1, TraceOptions(detect_closure=False))
    assert self_intersections(tr) == []


def test_crossing_through_far_chart_counted_once():
    # the same figure eight pushed near infinity is seen only in the w chart
    tr = figure_eight_trace()
    w = 0.2 * tr.z
    far = GeodesicTrace(t=tr.t, chart=np.array(["W"] * tr.t.size), z=w, v=0.2 * tr.v,
                        u=tr.u, c=tr.c, event=tr.event, max_invariant_drift=0.0)
    hits = self_intersections(far)
    assert len(hits) == 1
    assert abs(hits[0][2]) > 1e8  # the node sits at w = 0, i.e. at infinity
