"""Analysis of traced geodesics: crossings, closure, cycles and verdicts."""
from .closure import ClosureReport, chart_view, detect_closure, reduce_mod_lattice
from .cycles import (AmbiguousWindingError, AngleDomainError, CycleChartError, GeodesicCycle,
                     ResidueConditionReport, cycle_from_closed_trace, cycle_from_segments,
                     enclosed_poles, external_angle, gauss_bonnet_defect, gauss_bonnet_report,
                     residue_condition_report, signed_area, winding_number)
from .intersections import Crossing, polyline_crossings, segment_crossing, self_intersections
from .omega import TAGS, OmegaOptions, OmegaVerdict, classify_omega

__all__ = [
    "AmbiguousWindingError", "AngleDomainError", "ClosureReport", "Crossing", "CycleChartError",
    "GeodesicCycle", "OmegaOptions", "OmegaVerdict", "ResidueConditionReport", "TAGS",
    "chart_view", "classify_omega", "cycle_from_closed_trace", "cycle_from_segments",
    "detect_closure", "enclosed_poles", "external_angle", "gauss_bonnet_defect",
    "gauss_bonnet_report", "polyline_crossings", "reduce_mod_lattice", "residue_condition_report",
    "segment_crossing", "self_intersections", "signed_area", "winding_number",
]
