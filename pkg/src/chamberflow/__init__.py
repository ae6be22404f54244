"""Numerical laboratory for chamber-valued decompositions, radial heat
kernel decay, Brownian drift on symmetric spaces, and invariance testing
on a rank-1 Schottky quotient lamination."""

__version__ = "0.1.0"

from .errors import NumericalError, UsageError
from .rootdata import ChamberVector, Root, RootSystem, build_root_system
from .decomp import (
    CartanTriple,
    GroupElement,
    IwasawaTriple,
    cartan,
    identity,
    iwasawa,
    radial_component,
)

__all__ = [
    "CartanTriple",
    "ChamberVector",
    "GroupElement",
    "IwasawaTriple",
    "NumericalError",
    "Root",
    "RootSystem",
    "UsageError",
    "build_root_system",
    "cartan",
    "identity",
    "iwasawa",
    "radial_component",
]
