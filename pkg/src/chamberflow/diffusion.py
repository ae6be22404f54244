"""Monte Carlo leafwise Brownian motion and rank-1 boundary machinery.

The walk starts at the basepoint coset, takes geodesic steps of fixed
length in uniformly random tangent directions, and advances time by
``eps^2 / (2 dim(G/K))`` per step, so that the generator is the full
Laplacian and the radial drift converges to twice the Weyl vector.

Endpoints are reported as NA coset representatives.  For SL(3,R) the
engine keeps the point in factored form throughout; the log singular
values of an endpoint are recovered with a scale-aware routine (direct SVD
for modest spreads, factored Gram-Schmidt or high-precision fallback for
large ones) because a raw double-precision product would lose the middle
exponent.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import _engine, _rng, disk
from .decomp import GroupElement
from .errors import NumericalError, UsageError
from .rootdata import ChamberVector, WALL_TOLERANCE

MAX_STEP_LENGTH = 0.05
_GROUP_DIM = {"sl2": _engine.SL2_DIM, "sl3": _engine.SL3_DIM}

# spread thresholds for the log-singular-value extraction; the direct SVD
# is trustworthy only while the smallest singular value stays above the
# s_max * machine-eps noise floor, i.e. for e^spread well under 1/eps
_DIRECT_SVD_SPREAD = 20.0
_SAFE_GAP = 30.0


def apply_thread_env() -> int:
    """Cap numba workers from CHAMBERFLOW_THREADS; result-invariant."""
    import numba

    raw = os.environ.get("CHAMBERFLOW_THREADS")
    if raw:
        try:
            n = max(1, int(raw))
        except ValueError as exc:
            raise UsageError("CHAMBERFLOW_THREADS must be an integer") from exc
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    return numba.get_num_threads()


def set_worker_count(n: int) -> None:
    import numba

    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


@dataclass(frozen=True)
class DiffusionConfig:
    group_id: str
    step_length: float = 0.02
    seed: int = 0
    paths: int = 1
    horizon: float = 1.0

    def __post_init__(self):
        if self.group_id not in _GROUP_DIM:
            raise UsageError(f"unsupported group {self.group_id!r}")
        if not 0 < self.step_length <= MAX_STEP_LENGTH:
            raise UsageError(f"step length must lie in (0, {MAX_STEP_LENGTH}]")
        if self.paths < 1:
            raise UsageError("need at least one path")
        if self.horizon < 0:
            raise UsageError("horizon must be nonnegative")

    @property
    def time_per_step(self) -> float:
        return self.step_length**2 / (2.0 * _GROUP_DIM[self.group_id])


@dataclass
class DiffusionSampleSet:
    """Seeded endpoint collection; a pure function of its construction data."""

    group_id: str
    seed: int
    path_indices: np.ndarray
    elapsed: np.ndarray
    endpoints: list  # NA-form GroupElements
    na_n: np.ndarray  # unit upper triangular parts, (paths, n, n)
    na_h: np.ndarray  # log-diagonal parts, (paths, n)

    def __len__(self) -> int:
        return len(self.endpoints)


@dataclass(frozen=True)
class BoundaryPoint:
    """Point of the rank-1 visual boundary, as a circle angle."""

    angle: float

    def __post_init__(self):
        object.__setattr__(self, "angle", float(self.angle) % (2.0 * math.pi))


# -- endpoint post-processing -------------------------------------------------


def _na_from_matrix_sl2(m: np.ndarray) -> tuple:
    """Closed-form NAK coordinates of a 2x2 unimodular matrix.

    The bottom row determines the K and A parts; all arithmetic stays at
    the dominant scale, so this is safe for very large diffusion endpoints.
    """
    a, b = m[0, 0], m[0, 1]
    c, d = m[1, 0], m[1, 1]
    r2 = math.hypot(c, d)
    if not np.isfinite(r2) or r2 == 0.0:
        raise NumericalError("degenerate endpoint matrix")
    g = -math.log(r2)
    x = (a * c + b * d) / (r2 * r2)
    n = np.array([[1.0, x], [0.0, 1.0]])
    h = np.array([g, -g])
    return n, h


def _matrix_from_na(n: np.ndarray, h: np.ndarray) -> np.ndarray:
    return n * np.exp(h)[np.newaxis, :]


def _run(group_id: str, seed: int, path_indices: np.ndarray, horizons: np.ndarray, eps: float):
    """Dispatch to the compiled kernels; returns factored NA endpoints."""
    idx = np.ascontiguousarray(path_indices, dtype=np.int64)
    hor = np.ascontiguousarray(horizons, dtype=np.float64)
    if group_id == "sl2":
        mats = _engine.run_paths_sl2(seed, idx, hor, eps)
        n_out = np.empty((len(idx), 2, 2))
        h_out = np.empty((len(idx), 2))
        for i, m in enumerate(mats):
            if not np.all(np.isfinite(m)):
                raise NumericalError(f"path {idx[i]} produced non-finite entries")
            n_out[i], h_out[i] = _na_from_matrix_sl2(m)
        return n_out, h_out
    n_out, h_out = _engine.run_paths_sl3(seed, idx, hor, eps)
    if not (np.all(np.isfinite(n_out)) and np.all(np.isfinite(h_out))):
        raise NumericalError("sl3 walk produced non-finite state")
    return n_out, h_out


def _build_sample_set(config: DiffusionConfig, path_indices, horizons) -> DiffusionSampleSet:
    n_out, h_out = _run(
        config.group_id, config.seed, path_indices, horizons, config.step_length
    )
    endpoints = [
        GroupElement(_matrix_from_na(n_out[i], h_out[i]), config.group_id)
        for i in range(len(path_indices))
    ]
    return DiffusionSampleSet(
        group_id=config.group_id,
        seed=config.seed,
        path_indices=np.asarray(path_indices, dtype=np.int64),
        elapsed=np.asarray(horizons, dtype=float),
        endpoints=endpoints,
        na_n=n_out,
        na_h=h_out,
    )


def simulate_path(config: DiffusionConfig, path_index: int) -> GroupElement:
    """Endpoint NA representative of one path; deterministic in (seed, index)."""
    s = _build_sample_set(config, [path_index], [config.horizon])
    return s.endpoints[0]


def simulate_many(config: DiffusionConfig) -> DiffusionSampleSet:
    idx = np.arange(config.paths, dtype=np.int64)
    horizons = np.full(config.paths, config.horizon)
    return _build_sample_set(config, idx, horizons)


def kb_horizon(config: DiffusionConfig, n: int, path_index: int) -> int:
    """The averaged-semigroup time drawn for this path: uniform on {0..n-1}."""
    if n < 1:
        raise UsageError("averaging depth must be at least 1")
    key = _rng.stream_key(config.seed, path_index, 1)
    return int(_rng.uniform_int(key, 0, n))


def kb_sample(config: DiffusionConfig, n: int, path_index: int) -> GroupElement:
    """One draw from the time-averaged diffusion: uniform horizon, then walk."""
    t = kb_horizon(config, n, path_index)
    s = _build_sample_set(config, [path_index], [float(t)])
    return s.endpoints[0]


def kb_sample_many(config: DiffusionConfig, n: int, count: int) -> DiffusionSampleSet:
    idx = np.arange(count, dtype=np.int64)
    horizons = np.array([float(kb_horizon(config, n, int(i))) for i in idx])
    return _build_sample_set(config, idx, horizons)


# -- radial extraction --------------------------------------------------------


def log_singular_values_na(n_part: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Descending log singular values of n * diag(exp(h)), scale-aware."""
    h = np.asarray(h, dtype=float)
    dim = len(h)
    scales = h + np.log(np.linalg.norm(n_part, axis=0))
    spread = float(scales.max() - scales.min())
    if spread <= _DIRECT_SVD_SPREAD:
        shift = h.mean()
        m = n_part * np.exp(h - shift)[np.newaxis, :]
        s = np.linalg.svd(m, compute_uv=False)
        return np.log(s) + shift
    order = np.argsort(scales)[::-1]
    logs = _graded_gs_log_diag(n_part, h, order)
    sorted_logs = np.sort(logs)[::-1]
    if dim > 1 and np.min(sorted_logs[:-1] - sorted_logs[1:]) < _SAFE_GAP:
        return _mp_log_singular_values(n_part, h)
    return sorted_logs


def _graded_gs_log_diag(n_part: np.ndarray, h: np.ndarray, order) -> np.ndarray:
    """log |R_jj| of the column-pivoted QR, with column scales kept symbolic.

    For well-separated scales the off-diagonal of R is exponentially
    subdominant, so these logs are the log singular values.
    """
    qs = []
    logs = np.empty(len(h))
    for rank_pos, j in enumerate(order):
        v = n_part[:, j].copy()
        for q in qs:
            v -= (v @ q) * q
        norm = np.linalg.norm(v)
        if norm == 0.0:
            raise NumericalError("rank-deficient endpoint factor")
        logs[rank_pos] = h[j] + math.log(norm)
        qs.append(v / norm)
    return logs


def _mp_log_singular_values(n_part: np.ndarray, h: np.ndarray) -> np.ndarray:
    import mpmath

    spread = float(h.max() - h.min())
    with mpmath.workdps(int(0.5 * spread) + 40):
        m = mpmath.matrix(len(h))
        for i in range(len(h)):
            for j in range(len(h)):
                m[i, j] = mpmath.mpf(float(n_part[i, j])) * mpmath.exp(
                    mpmath.mpf(float(h[j]))
                )
        s = mpmath.svd_r(m, compute_uv=False)
        logs = sorted((float(mpmath.log(x)) for x in s), reverse=True)
    return np.array(logs)


def radial_components(samples: DiffusionSampleSet) -> np.ndarray:
    """Chamber-ordered radial vectors of every endpoint, (paths, n)."""
    out = np.empty_like(samples.na_h)
    for i in range(len(samples)):
        out[i] = log_singular_values_na(samples.na_n[i], samples.na_h[i])
    return out


def radial_component_na(g: GroupElement) -> ChamberVector:
    """Radial part of an NA-form element via the scale-aware route."""
    n, h = _split_na(g.entries)
    return ChamberVector(log_singular_values_na(n, h))


def _split_na(m: np.ndarray) -> tuple:
    d = np.diag(m).copy()
    if np.any(d <= 0) or np.any(np.tril(m, -1) != 0.0):
        raise UsageError("matrix is not in NA form")
    return m / d[np.newaxis, :], np.log(d)


# -- rank-1 boundary operations ----------------------------------------------


def frame_angle_sl2(g: GroupElement) -> float:
    """Angle (mod pi) of the left orthogonal Cartan factor of a 2x2 element."""
    m = g.entries
    a2 = m[0, 0] ** 2 + m[0, 1] ** 2
    c2 = m[1, 0] ** 2 + m[1, 1] ** 2
    b = m[0, 0] * m[1, 0] + m[0, 1] * m[1, 1]
    return 0.5 * math.atan2(2.0 * b, a2 - c2) % math.pi


def radial_log_sl2(g: GroupElement) -> float:
    """log of the top singular value of a 2x2 unimodular matrix."""
    m = g.entries
    a2 = m[0, 0] ** 2 + m[0, 1] ** 2
    c2 = m[1, 0] ** 2 + m[1, 1] ** 2
    b = m[0, 0] * m[1, 0] + m[0, 1] * m[1, 1]
    lam = 0.5 * (a2 + c2) + math.hypot(0.5 * (a2 - c2), b)
    return 0.5 * math.log(lam)


def exit_direction(endpoint: GroupElement):
    """Boundary direction of an SL(2,R) endpoint, or None for wall samples.

    Wall samples (radial part within the wall tolerance of zero) carry no
    well-defined direction and are excluded from histograms by the caller.
    """
    if endpoint.group_id != "sl2":
        raise UsageError("exit directions are implemented for sl2 only")
    r = radial_log_sl2(endpoint)
    # radial chamber vector is (r, -r); its wall distance is 2r
    if 2.0 * r <= WALL_TOLERANCE:
        return None
    theta = frame_angle_sl2(endpoint)
    return BoundaryPoint(theta)


def poisson_kernel(x: GroupElement, xi: BoundaryPoint) -> float:
    """Normalized boundary kernel k(p, x, xi) in the disk model (sl2 only)."""
    if x.group_id != "sl2":
        raise UsageError("the boundary kernel is implemented for sl2 only")
    z = disk.base_point(disk.su11_from_sl2(x.entries))
    e = complex(math.cos(xi.angle), math.sin(xi.angle))
    denom = abs(z - e) ** 2
    if denom == 0.0:
        raise NumericalError("evaluation point collapsed onto the boundary")
    return (1.0 - abs(z) ** 2) / denom


def modular_function(g: GroupElement) -> float:
    """Right-vs-left Haar density on the NA subgroup, via the boundary kernel."""
    if g.group_id != "sl2":
        raise UsageError("the modular function is implemented for sl2 only")
    m = g.entries
    if abs(m[1, 0]) > 1e-10 or m[0, 0] <= 0 or m[1, 1] <= 0:
        raise UsageError("argument must be upper triangular with positive diagonal")
    # the relevant boundary point is the one fixed by the full NA subgroup
    return poisson_kernel(g, BoundaryPoint(0.0))
