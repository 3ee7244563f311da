"""Geodesics of meromorphic connections on the Riemann sphere and on tori.

The main entry points are :class:`SphereConnection` (a connection ``R(z) dz``
with its pole catalog), :func:`trace` (numerical continuation of a geodesic),
:func:`classify_omega` (limit-set verdicts) and :func:`classify_torus`.
"""
from .classify import classify_omega, detect_closure, gauss_bonnet_defect, self_intersections
from .expr import ParseError, parse_form, print_form
from .integrate import GeodesicTrace, TraceOptions, reverse_trace, trace
from .rational import RationalForm
from .sphere import SphereConnection
from .torus import TorusSpec, classify_torus

__version__ = "0.1.0"

__all__ = [
    "GeodesicTrace",
    "ParseError",
    "RationalForm",
    "SphereConnection",
    "TorusSpec",
    "TraceOptions",
    "classify_omega",
    "classify_torus",
    "detect_closure",
    "gauss_bonnet_defect",
    "parse_form",
    "print_form",
    "reverse_trace",
    "self_intersections",
    "trace",
]
