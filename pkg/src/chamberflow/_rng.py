"""Counter-based seeded random streams.

Every draw is a pure function of (seed, path_index, stream, counter), so
sample sets are reproducible regardless of scheduling or worker count.
The generator is the SplitMix64 finalizer applied to an affine counter
walk; substreams are separated by mixing the key components before the
counter is added.  The numba engine reimplements the same arithmetic; a
unit test pins the two implementations against each other.

Stream ids: 0 = step directions, 1 = averaging-horizon draws.
"""

from __future__ import annotations

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
PATH_SALT = np.uint64(0xD6E8FEB86659FD93)
STREAM_SALT = np.uint64(0xA5A5B4E9F0E1D2C3)

_U64 = np.uint64
_INV_2_53 = 1.0 / 9007199254740992.0  # 2^-53


def mix64(z: np.uint64) -> np.uint64:
    z = _U64(z)
    z ^= z >> _U64(30)
    z = _U64(z * MIX1)
    z ^= z >> _U64(27)
    z = _U64(z * MIX2)
    z ^= z >> _U64(31)
    return z


def stream_key(seed: int, path_index: int, stream: int) -> np.uint64:
    with np.errstate(over="ignore"):
        k = mix64(_U64(seed) * GAMMA + _U64(1))
        k = mix64(k ^ (_U64(path_index) * PATH_SALT + _U64(1)))
        k = mix64(k ^ (_U64(stream) * STREAM_SALT + _U64(1)))
    return k


def raw(key: np.uint64, counter) -> np.ndarray:
    """uint64 draws at the given counters (scalar or array)."""
    c = np.asarray(counter, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(_U64(key) + c * GAMMA)


def uniform(key: np.uint64, counter) -> np.ndarray:
    """Uniform doubles in (0, 1), strictly positive so logs are safe."""
    bits = raw(key, counter)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53


def uniform_int(key: np.uint64, counter, n: int):
    """Uniform integer in {0, ..., n-1} at the given counter."""
    u = uniform(key, counter)
    return np.minimum((u * n).astype(np.int64), n - 1)
