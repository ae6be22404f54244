"""Disk-model helpers for SL(2,R).

Real matrices act on the upper half-plane; conjugating by the Cayley map
``w -> (w - i)/(w + i)`` turns them into SU(1,1) elements

    [[alpha, beta], [conj(beta), conj(alpha)]],   |alpha|^2 - |beta|^2 = 1,

acting on the unit disk by ``z -> (alpha z + beta)/(conj(beta) z + conj(alpha))``.
The basepoint is the disk center (= i in the half-plane).  Boundary points
are unit-circle angles.

Distances labelled "flat" are in the trace-form metric used by the rest of
the package; they differ from the curvature -1 hyperbolic distance by a
factor sqrt(2).
"""

from __future__ import annotations

import cmath
import math

import numpy as np

SQRT2 = math.sqrt(2.0)


def su11_from_sl2(m: np.ndarray) -> tuple:
    """(alpha, beta) of the Cayley conjugate of a real 2x2 unimodular matrix."""
    a, b = float(m[0, 0]), float(m[0, 1])
    c, d = float(m[1, 0]), float(m[1, 1])
    alpha = complex((a + d) / 2.0, (b - c) / 2.0)
    beta = complex((a - d) / 2.0, -(b + c) / 2.0)
    return alpha, beta


def sl2_from_su11(alpha: complex, beta: complex) -> np.ndarray:
    a = alpha.real + beta.real
    d = alpha.real - beta.real
    b = alpha.imag - beta.imag
    c = -(alpha.imag + beta.imag)
    return np.array([[a, b], [c, d]])


def su11_mul(p: tuple, q: tuple) -> tuple:
    a1, b1 = p
    a2, b2 = q
    return (a1 * a2 + b1 * b2.conjugate(), a1 * b2 + b1 * a2.conjugate())


def su11_inv(p: tuple) -> tuple:
    a, b = p
    return (a.conjugate(), -b)


def apply_point(p: tuple, z: complex) -> complex:
    a, b = p
    return (a * z + b) / (b.conjugate() * z + a.conjugate())


def base_point(p: tuple) -> complex:
    """Image of the basepoint (disk center) under the group element."""
    a, b = p
    return b / a.conjugate()


def apply_boundary(p: tuple, theta: float) -> float:
    """Action on a boundary angle; returns the image angle in [0, 2pi)."""
    z = cmath.exp(1j * theta)
    a, b = p
    w = (a * z + b) / (b.conjugate() * z + a.conjugate())
    return cmath.phase(w) % (2.0 * math.pi)


def flat_distance_to_center(z: complex) -> float:
    """Trace-form distance from the basepoint to the disk point z."""
    r = abs(z)
    if r >= 1.0:
        return math.inf
    return SQRT2 * math.atanh(r)


def translation_to(z: complex) -> tuple:
    """The SU(1,1) translation along the geodesic from the center to z."""
    r = abs(z)
    if r >= 1.0:
        raise ValueError("point must be inside the open disk")
    s = 1.0 / math.sqrt(1.0 - r * r)
    return (complex(s, 0.0), s * z)


def rotation(phi: float) -> tuple:
    """SU(1,1) element rotating the disk by the angle phi about the center."""
    return (cmath.exp(0.5j * phi), 0.0)
