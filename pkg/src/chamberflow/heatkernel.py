"""Radial density grids on the closed positive chamber.

The radial flight density at time t is the product of the kernel envelope
(rank-dependent polynomial prefactor times the Gaussian factor
``exp(-|rho|^2 t - <rho,H> - |H|^2/4t)``) and the orbit-volume factor
``prod sinh<alpha,H>`` over the positive roots.  Both are computed in log
space; the grid is exponentiated after subtracting its maximum and then
normalized to unit mass, so the unknown envelope constant cancels.

Grids are parametrized by the simple-root pairing coordinates
``y_i = <alpha_i, H> >= 0``, which identify the closed chamber with the
positive orthant for the supported groups.  The per-axis box default is
``[0, <alpha, 2 rho> t + 8 sqrt(t) |alpha|]``, which captures the Gaussian
bulk around ``2 rho t``; construction fails loudly if more than 1e-6 of the
mass lands on the outermost cells.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, UsageError
from .rootdata import ChamberVector, RootSystem

log = logging.getLogger(__name__)

MIN_CELLS_PER_AXIS = 400
BOUNDARY_MASS_LIMIT = 1e-6
NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class RadialDensityGrid:
    """Normalized radial density sampled at cell centers of a pairing-coordinate box."""

    root_system: RootSystem
    t: float
    box: tuple  # per-axis upper pairing bound; lower bound is 0
    step: float
    values: np.ndarray  # shape (cells,) * rank, unit mass after * cell_measure
    cell_measure: float  # Lebesgue volume on the flat of one cell

    @property
    def rank(self) -> int:
        return self.root_system.rank

    def axis_centers(self, axis: int) -> np.ndarray:
        ncells = self.values.shape[axis]
        return (np.arange(ncells) + 0.5) * self.step

    def total_mass(self) -> float:
        return float(self.values.sum() * self.cell_measure)

    def argmax_pairings(self) -> np.ndarray:
        """Pairing coordinates of the cell carrying the largest density."""
        idx = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        return np.array([(i + 0.5) * self.step for i in idx])

    def argmax_cell_offset(self) -> np.ndarray:
        """Per-axis cell-index distance between the density argmax and 2*rho*t."""
        idx = np.unravel_index(int(np.argmax(self.values)), self.values.shape)
        target = np.floor(
            np.array([2.0 * self.t / self.step] * self.rank)
        ).astype(int)
        # <alpha_i, 2 rho t> = 2t for every simple root of these split groups
        return np.abs(np.array(idx) - target)


def log_envelope(rs: RootSystem, h: ChamberVector, t: float) -> float:
    """Log of the radial kernel envelope at H, with its unknown constant set to 1."""
    if t <= 0:
        raise UsageError("time must be positive")
    if rs.chamber_distance(h) < -1e-10:
        raise UsageError("H must lie in the closed positive chamber")
    pairings = np.array([rs.pair(a, h) for a in rs.simple_roots])
    return float(_log_envelope_arrays(rs, pairings[:, np.newaxis], t)[0])


def _log_envelope_arrays(rs: RootSystem, y: np.ndarray, t: float) -> np.ndarray:
    """Vectorized envelope; y has shape (rank, ...) of simple-root pairings."""
    ell = rs.rank
    out = -0.5 * ell * np.log(t) - rs.rho_norm_sq() * t
    for i in range(ell):
        u = (1.0 + y[i]) / t
        # split groups: (m_alpha + m_2alpha)/2 - 1 = -1/2 per indecomposable root
        out = out + np.log(u) - 0.5 * np.log1p(u)
    out = out - _rho_pairing_from_simple(rs, y) - _norm_sq_from_simple(rs, y) / (4.0 * t)
    return out


def _rho_pairing_from_simple(rs: RootSystem, y: np.ndarray) -> np.ndarray:
    # <rho, H> in terms of simple pairings: rho = sum of fundamental coweights'
    # duals; for A1/A2 every simple root satisfies <rho, coroot> = 1, giving
    # <rho, H> = sum_i c_i with Gram-inverse weights.
    ginv = np.linalg.inv(rs.simple_gram())
    rho_pair = np.array(
        [rs.pair(a, rs.weyl_vector) for a in rs.simple_roots]
    )  # = <alpha_i, rho>
    w = ginv @ rho_pair
    return np.tensordot(w, y, axes=(0, 0))


def _norm_sq_from_simple(rs: RootSystem, y: np.ndarray) -> np.ndarray:
    ginv = np.linalg.inv(rs.simple_gram())
    out = 0.0
    for i in range(rs.rank):
        for j in range(rs.rank):
            out = out + ginv[i, j] * y[i] * y[j]
    return out


ZERO_VOLUME = None  # flag returned for wall points where sinh vanishes


def log_orbit_volume(rs: RootSystem, h: ChamberVector):
    """``sum m_alpha * log sinh <alpha, H>`` over positive roots.

    Returns the ZERO_VOLUME flag (None) when any pairing vanishes, instead
    of a numeric -inf.
    """
    if rs.chamber_distance(h) < -1e-10:
        raise UsageError("H must lie in the closed positive chamber")
    total = 0.0
    for a in rs.positive_roots:
        x = rs.pair(a, h)
        if x <= 0.0:
            return ZERO_VOLUME
        total += a.multiplicity * _log_sinh(x)
    return total


def _log_sinh(x):
    # stable for large x: log sinh x = x + log(1 - e^{-2x}) - log 2
    return x + np.log1p(-np.exp(-2.0 * x)) - np.log(2.0)


def _log_orbit_arrays(rs: RootSystem, y: np.ndarray) -> np.ndarray:
    """Vectorized orbit volume from simple pairings (positive roots of A1/A2
    are sums of consecutive simple roots)."""
    if rs.rank == 1:
        return _log_sinh(y[0])
    # A2: positive roots pair as y1, y2, y1 + y2
    return _log_sinh(y[0]) + _log_sinh(y[1]) + _log_sinh(y[0] + y[1])


def default_box(rs: RootSystem, t: float) -> tuple:
    out = []
    for a in rs.simple_roots:
        alpha_norm = float(np.linalg.norm(a.functional))
        out.append(rs.pair(a, rs.two_rho) * t + 8.0 * np.sqrt(t) * alpha_norm)
    return tuple(out)


def flight_density_grid(
    rs: RootSystem,
    t: float,
    box: tuple | None = None,
    step: float | None = None,
) -> RadialDensityGrid:
    """Build the normalized radial density grid for diffusion time t."""
    if t <= 0:
        raise UsageError("time must be positive")
    if box is None:
        box = default_box(rs, t)
    box = tuple(float(b) for b in box)
    if len(box) != rs.rank or any(b <= 0 for b in box):
        raise UsageError("box must give a positive pairing bound per simple root")
    if step is None:
        step = max(box) / MIN_CELLS_PER_AXIS
    if step <= 0:
        raise UsageError("step must be positive")

    axes = [
        (np.arange(int(np.ceil(b / step))) + 0.5) * step for b in box
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    y = np.stack(mesh)  # (rank, ...) pairing coordinates at cell centers
    logv = _log_envelope_arrays(rs, y, t) + _log_orbit_arrays(rs, y)
    logv -= logv.max()
    values = np.exp(logv)

    ginv = np.linalg.inv(rs.simple_gram())
    cell_measure = step**rs.rank * float(np.sqrt(np.linalg.det(ginv)))
    mass = values.sum() * cell_measure
    if mass <= 0 or not np.isfinite(mass):
        raise NumericalError("density mass is degenerate; check t and box")
    values = values / mass

    boundary = 0.0
    for axis in range(rs.rank):
        sl = [slice(None)] * rs.rank
        sl[axis] = -1
        boundary += values[tuple(sl)].sum() * cell_measure
    if boundary > BOUNDARY_MASS_LIMIT:
        raise NumericalError(
            f"box too small: boundary cells carry {boundary:.2e} of the mass; "
            "enlarge the per-axis pairing bounds"
        )
    return RadialDensityGrid(
        root_system=rs,
        t=float(t),
        box=box,
        step=float(step),
        values=values,
        cell_measure=cell_measure,
    )


def _lattice_shift(grid: RadialDensityGrid, h0: ChamberVector) -> tuple:
    rs = grid.root_system
    if rs.chamber_distance(h0) < -1e-10:
        raise UsageError("the shift must lie in the closed positive chamber")
    shifts = []
    for a in rs.simple_roots:
        d = rs.pair(a, h0)
        s = int(round(d / grid.step))
        if abs(s * grid.step - d) > 1e-12 * max(1.0, abs(d)):
            log.warning(
                "shift pairing %.6g rounded to %d lattice steps (%.6g)",
                d,
                s,
                s * grid.step,
            )
        shifts.append(s)
    return tuple(shifts)


def shift_l1_distance(grid: RadialDensityGrid, h0: ChamberVector) -> float:
    """L1 distance between the density and its copy shifted by H0.

    Reads past the box boundary count as density zero.  Value in [0, 2].
    """
    shifts = _lattice_shift(grid, h0)
    v = grid.values
    shifted = np.zeros_like(v)
    src = tuple(slice(s, None) for s in shifts)
    dst = tuple(slice(None, d - s if s else None) for s, d in zip(shifts, v.shape))
    shifted[dst] = v[src]
    return float(np.abs(v - shifted).sum() * grid.cell_measure)


def slab_mass(grid: RadialDensityGrid, h0: ChamberVector, face_index: int) -> float:
    """Mass of the density on the slab of width |H0| along one chamber face.

    Discretized as the cells whose center lies within Euclidean distance
    |H0| of the wall hyperplane carrying the chosen face.
    """
    rs = grid.root_system
    if not 0 <= face_index < rs.rank:
        raise UsageError(f"face_index must be in [0, {rs.rank})")
    alpha = rs.simple_roots[face_index]
    alpha_norm = float(np.linalg.norm(alpha.functional))
    width = h0.norm()
    centers = grid.axis_centers(face_index)
    mask = centers / alpha_norm <= width  # distance to the wall <alpha,.> = 0
    sl = [slice(None)] * rs.rank
    sl[face_index] = mask
    return float(grid.values[tuple(sl)].sum() * grid.cell_measure)


def concentration_fraction(grid: RadialDensityGrid, radius_exponent: float) -> float:
    """Fraction of mass within Euclidean radius t^{(1+eps)/2} of 2*rho*t."""
    if radius_exponent <= 0:
        raise UsageError("radius exponent must be positive")
    rs = grid.root_system
    t = grid.t
    radius = t ** ((1.0 + radius_exponent) / 2.0)
    axes = [grid.axis_centers(i) for i in range(rs.rank)]
    mesh = np.meshgrid(*axes, indexing="ij")
    # center in pairing coordinates: <alpha_i, 2 rho t>
    center = np.array([rs.pair(a, rs.two_rho) * t for a in rs.simple_roots])
    d = np.stack([m - c for m, c in zip(mesh, center)])
    dist_sq = _norm_sq_from_simple(rs, d)
    mask = dist_sq <= radius * radius
    return float(grid.values[mask].sum() * grid.cell_measure)
