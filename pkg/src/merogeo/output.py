"""Deterministic JSON, CSV and SVG writers.

Floats are always printed with 17 significant digits so that the same run
produces byte-identical files on every platform with IEEE doubles.
"""
from __future__ import annotations

import csv
import io
import json
import math
import xml.etree.ElementTree as ET

import numpy as np

from .sphere import Chart

__all__ = ["fmt_float", "dumps", "trace_csv", "trace_json", "trace_svg", "torus_svg"]


def fmt_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0:
        return "0.0"  # also folds -0.0
    text = format(x, ".17g")
    if not any(ch in text for ch in ".en"):
        text += ".0"
    return text


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return _encode([obj.real, obj.imag], indent, level)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)
               for v in seq):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in seq) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "to_json"):
        return _encode(obj.to_json(), indent, level)
    if hasattr(obj, "value"):  # enums
        return _encode(obj.value, indent, level)
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with fixed 17-digit floats and a trailing newline."""
    return _encode(obj, indent, 0) + "\n"


def trace_csv(tr) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "chart", "re", "im", "v_re", "v_im", "z_re", "z_im"])
    zs = tr.positions_z()
    for t, ch, z, v, zz in zip(tr.t, tr.chart, tr.z, tr.v, zs):
        w.writerow([format(float(t), ".17g"), str(ch),
                    format(z.real, ".17g"), format(z.imag, ".17g"),
                    format(v.real, ".17g"), format(v.imag, ".17g"),
                    format(zz.real, ".17g"), format(zz.imag, ".17g")])
    return buf.getvalue()


def trace_json(tr) -> dict:
    return {
        "event": tr.event.to_json(),
        "max_invariant_drift": tr.max_invariant_drift,
        "chart_switches": list(tr.chart_switches),
        "samples": [[float(t), str(ch), float(z.real), float(z.imag), float(v.real), float(v.imag)]
                    for t, ch, z, v in zip(tr.t, tr.chart, tr.z, tr.v)],
    }


PANEL = 400.0
MARGIN = 0.05


class _Frame:
    """Maps a bounding box (with a 5% margin) onto a square panel."""

    def __init__(self, pts: np.ndarray, x_off: float):
        pts = pts[np.isfinite(pts)]
        if pts.size == 0:
            pts = np.array([0j])
        x0, x1 = pts.real.min(), pts.real.max()
        y0, y1 = pts.imag.min(), pts.imag.max()
        span = max(x1 - x0, y1 - y0, 1e-9)
        cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        half = 0.5 * span * (1 + 2 * MARGIN)
        self.x0, self.y1, self.scale = cx - half, cy + half, PANEL / (2 * half)
        self.x_off = x_off

    def xy(self, z: complex) -> tuple[float, float]:
        return (self.x_off + (z.real - self.x0) * self.scale, (self.y1 - z.imag) * self.scale)

    def inside(self, z: complex) -> bool:
        x, y = self.xy(z)
        return self.x_off <= x <= self.x_off + PANEL and 0 <= y <= PANEL


def _path_d(frame: _Frame, pts) -> str:
    cmds = []
    for k, z in enumerate(pts):
        x, y = frame.xy(complex(z))
        cmds.append(f"{'M' if k == 0 else 'L'}{x:.3f},{y:.3f}")
    return " ".join(cmds)


def _cross(parent, frame: _Frame, z: complex, size: float = 5.0):
    x, y = frame.xy(z)
    for dx, dy in ((size, size), (size, -size)):
        ET.SubElement(parent, "line", x1=f"{x - dx:.3f}", y1=f"{y - dy:.3f}",
                      x2=f"{x + dx:.3f}", y2=f"{y + dy:.3f}", stroke="red")


def _svg_root(width: float) -> ET.Element:
    return ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=f"{width:g}",
                      height=f"{PANEL:g}", viewBox=f"0 0 {width:g} {PANEL:g}")


def _to_text(root: ET.Element) -> str:
    ET.indent(root)
    return ET.tostring(root, encoding="unicode", xml_declaration=False) + "\n"


def trace_svg(tr, conn=None) -> str:
    """Chart Z on the left, chart W on the right; one path per chart segment."""
    root = _svg_root(2 * PANEL)
    frames = {}
    for k, chart in enumerate((Chart.Z, Chart.W)):
        pts = tr.z[tr.chart == chart.value].astype(complex)
        frames[chart] = _Frame(pts, k * PANEL)
        g = ET.SubElement(root, "g", id=f"chart-{chart.value}")
        ET.SubElement(g, "rect", x=f"{k * PANEL:g}", y="0", width=f"{PANEL:g}",
                      height=f"{PANEL:g}", fill="none", stroke="#999")
        ET.SubElement(g, "text", x=f"{k * PANEL + 8:g}", y="16").text = \
            "z" if chart is Chart.Z else "w = 1/z"
        if conn is not None:
            for loc, _ in conn.poles_in(chart):
                if frames[chart].inside(loc):
                    _cross(g, frames[chart], loc)
    for i, j in tr.slices():
        chart = Chart(tr.chart[i])
        ET.SubElement(root, "path", d=_path_d(frames[chart], tr.z[i:j]), fill="none",
                      stroke="black", **{"stroke-width": "1"})
    x, y = frames[Chart(tr.chart[0])].xy(complex(tr.z[0]))
    ET.SubElement(root, "circle", cx=f"{x:.3f}", cy=f"{y:.3f}", r="3", fill="blue")
    return _to_text(root)


def torus_svg(tr, lam: complex) -> str:
    """Trajectory projected to the fundamental parallelogram."""
    from .torus import lattice_coordinates, project_to_fundamental

    root = _svg_root(PANEL)
    corners = np.array([0, 1, 1 + lam, lam], dtype=complex)
    frame = _Frame(corners, 0.0)
    pts = " ".join("{:.3f},{:.3f}".format(*frame.xy(complex(c))) for c in corners)
    ET.SubElement(root, "polygon", points=pts, fill="none", stroke="#999")
    proj = np.array([project_to_fundamental(complex(z), lam) for z in tr.z])
    cells = np.array([[math.floor(c) for c in lattice_coordinates(complex(z), lam)] for z in tr.z])
    start = 0
    for k in range(1, proj.size + 1):
        if k == proj.size or np.any(cells[k] != cells[k - 1]):
            if k - start >= 2:
                ET.SubElement(root, "path", d=_path_d(frame, proj[start:k]), fill="none",
                              stroke="black", **{"stroke-width": "1"})
            start = k
    x, y = frame.xy(complex(proj[0]))
    ET.SubElement(root, "circle", cx=f"{x:.3f}", cy=f"{y:.3f}", r="3", fill="blue")
    return _to_text(root)
