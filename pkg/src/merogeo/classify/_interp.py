"""Cubic Hermite interpolation between trace samples."""
from __future__ import annotations


def hermite(z0: complex, v0: complex, z1: complex, v1: complex, dt: float, s: float) -> complex:
    """Position at fraction ``s`` of a step of length ``dt``."""
    s2, s3 = s * s, s * s * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    return h00 * z0 + h10 * dt * v0 + h01 * z1 + h11 * dt * v1


def hermite_velocity(z0: complex, v0: complex, z1: complex, v1: complex, dt: float,
                     s: float) -> complex:
    """Time derivative (not the ``s`` derivative) of :func:`hermite`."""
    s2 = s * s
    d00 = 6 * s2 - 6 * s
    d10 = 3 * s2 - 4 * s + 1
    d01 = -6 * s2 + 6 * s
    d11 = 3 * s2 - 2 * s
    return (d00 * z0 + d01 * z1) / dt + d10 * v0 + d11 * v1
