"""Meromorphic connections on the Riemann sphere in the charts z and w = 1/z.

The connection is given by ``R(z) dz`` in the standard chart.  In the chart
``w = 1/z`` the tangent-bundle connection picks up the logarithmic derivative
of the coordinate change, so

    R_w(w) = -R(1/w) / w**2 - 2/w.

The Euler characteristic of the sphere is fixed at 2: the residues of any
connection, the point at infinity included, add up to -2.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .rational import (PoleCatalog, RationalForm, build_catalog, pmul, residue_at,
                       trim)

__all__ = [
    "Chart",
    "ChartPoint",
    "ChartSwitchError",
    "SphereConnection",
    "EULER_CHARACTERISTIC",
    "SWITCH_RADIUS",
    "INFINITY",
    "induce_w_form",
    "residue_at_infinity",
    "residue_sum_report",
    "to_other_chart",
]

EULER_CHARACTERISTIC = 2
SWITCH_RADIUS = 2.0
INFINITY = "inf"

PoleId = Union[int, str]


class Chart(str, enum.Enum):
    Z = "Z"
    W = "W"

    @property
    def other(self) -> "Chart":
        return Chart.W if self is Chart.Z else Chart.Z


class ChartSwitchError(ValueError):
    """Raised when switching charts at the origin of the current chart."""


@dataclass(frozen=True)
class ChartPoint:
    chart: Chart
    position: complex
    velocity: complex | None = None

    def to_z(self) -> complex:
        """Position in the standard chart (``inf`` for w = 0)."""
        if self.chart is Chart.Z:
            return self.position
        if self.position == 0:
            return complex(math.inf, 0)
        return 1.0 / self.position

    def in_chart(self, chart: Chart) -> "ChartPoint":
        return self if chart is self.chart else to_other_chart(self)


def to_other_chart(p: ChartPoint) -> ChartPoint:
    """Change coordinates ``z <-> 1/z``; velocities map by ``-v/pos**2``."""
    if p.position == 0:
        raise ChartSwitchError("position 0 is the point at infinity of the other chart")
    pos = complex(p.position)
    vel = None if p.velocity is None else -complex(p.velocity) / (pos * pos)
    return ChartPoint(p.chart.other, 1.0 / pos, vel)


def induce_w_form(f: RationalForm) -> RationalForm:
    """Coefficient of the connection form in the chart ``w = 1/z``."""
    correction = RationalForm.make([-2], [0, 1])
    if f.is_zero:
        return correction
    n, d = len(f.num) - 1, len(f.den) - 1
    # R(1/w) = w**(d-n) * Nrev(w) / Drev(w); then multiply by -1/w**2
    nrev = -np.asarray(f.num[::-1], dtype=complex)
    drev = np.asarray(f.den[::-1], dtype=complex)
    shift = d - n - 2
    if shift >= 0:
        nrev = pmul(nrev, np.eye(1, shift + 1, shift, dtype=complex)[0])
    else:
        drev = pmul(drev, np.eye(1, -shift + 1, -shift, dtype=complex)[0])
    return RationalForm.make(trim(nrev), trim(drev)) + correction


@dataclass(frozen=True)
class SphereConnection:
    """A meromorphic connection on P^1 with its pole data in both charts."""

    form_z: RationalForm
    form_w: RationalForm = field(repr=False)
    catalog_z: PoleCatalog
    catalog_w: PoleCatalog = field(repr=False)
    residue_infinity: complex
    order_infinity: int

    @classmethod
    def from_form(cls, f: RationalForm) -> "SphereConnection":
        fw = induce_w_form(f)
        cz = build_catalog(f)
        cw = build_catalog(fw)
        res_inf, order_inf = 0j, 0
        i, dist = cw.nearest(0j)
        if i >= 0 and dist <= 1e-8:
            res_inf, order_inf = cw[i].residue, cw[i].order
        return cls(f, fw, cz, cw, complex(res_inf), int(order_inf))

    @classmethod
    def from_source(cls, src: str) -> "SphereConnection":
        from .expr import parse_form
        return cls.from_form(parse_form(src))

    def form(self, chart: Chart) -> RationalForm:
        return self.form_z if chart is Chart.Z else self.form_w

    def poles_in(self, chart: Chart) -> list[tuple[complex, PoleId]]:
        """Pole positions visible in ``chart`` tagged with global pole ids.

        Ids are indices into ``catalog_z``; the point at infinity is ``"inf"``.
        """
        if chart is Chart.Z:
            return [(e.location, k) for k, e in enumerate(self.catalog_z)]
        out: list[tuple[complex, PoleId]] = []
        if self.order_infinity > 0:
            out.append((0j, INFINITY))
        for k, e in enumerate(self.catalog_z):
            if e.location != 0:
                out.append((1.0 / e.location, k))
        return out

    def residue(self, pole: PoleId) -> complex:
        if pole == INFINITY:
            return self.residue_infinity
        return self.catalog_z[int(pole)].residue

    def pole_location(self, pole: PoleId) -> complex:
        if pole == INFINITY:
            return complex(math.inf, 0)
        return self.catalog_z[int(pole)].location

    def pole_ids(self) -> list[PoleId]:
        ids: list[PoleId] = list(range(len(self.catalog_z)))
        if self.order_infinity > 0:
            ids.append(INFINITY)
        return ids

    def residue_in_w_chart(self, pole: PoleId) -> complex:
        """Residue recomputed from ``form_w`` at the image of ``pole``."""
        if pole == INFINITY:
            return self.residue_infinity
        loc = self.catalog_z[int(pole)].location
        if loc == 0:
            raise ValueError("the pole z = 0 is not visible in the chart w = 1/z")
        target = 1.0 / loc
        i, _ = self.catalog_w.nearest(target)
        others = [e.location for e in self.catalog_w]
        return residue_at(self.form_w, self.catalog_w[i].location, self.catalog_w[i].order,
                          other_poles=others)

    def catalog_json(self) -> dict:
        return {
            "poles": self.catalog_z.to_json(),
            "infinity": {"order": self.order_infinity,
                         "res_re": self.residue_infinity.real,
                         "res_im": self.residue_infinity.imag},
        }


def residue_at_infinity(conn: SphereConnection) -> complex:
    return conn.residue_infinity


def residue_sum_report(conn: SphereConnection) -> tuple[complex, float]:
    """Total residue (finite poles plus infinity) and its distance from -2."""
    total = conn.catalog_z.residue_sum() + conn.residue_infinity
    return total, abs(total + EULER_CHARACTERISTIC)
