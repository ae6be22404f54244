"""Compiled geodesic random-walk kernels.

One path is one independent task: the endpoint is a pure function of
(seed, path_index, horizon, step length), so the parallel drivers are
bit-identical for any worker count.

SL(2,R) paths accumulate the raw 2x2 product; entries stay inside double
range for the horizons used here and every downstream quantity (radial
part, frame angle, NA coordinates) is recovered from dominant-scale data.

SL(3,R) paths keep the running point in factored NA form (unit upper
triangular times exp(h)) and merge windows of a few hundred steps at a
time.  The merge rescales the window's unit-triangular factor by
exp(h_i - h_j), which stays tame because the log-diagonal h orders itself
along the drift; this is what preserves the middle singular value that a
raw product would lose to round-off.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

GAMMA = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
PATH_SALT = np.uint64(0xD6E8FEB86659FD93)
STREAM_SALT = np.uint64(0xA5A5B4E9F0E1D2C3)

SL2_DIM = 2  # dim G/K for SL(2,R)
SL3_DIM = 5  # dim G/K for SL(3,R)
WINDOW = 256  # steps between NA merges for the sl3 kernel

_INV_2_53 = 1.0 / 9007199254740992.0
_SQRT2 = math.sqrt(2.0)
_SQRT6 = math.sqrt(6.0)
_ONE = np.uint64(1)
_TWO = np.uint64(2)


@njit(cache=True, inline="always")
def _mix64(z):
    z = z ^ (z >> np.uint64(30))
    z = z * MIX1
    z = z ^ (z >> np.uint64(27))
    z = z * MIX2
    z = z ^ (z >> np.uint64(31))
    return z


@njit(cache=True, inline="always")
def _stream_key(seed, path_index, stream):
    k = _mix64(np.uint64(seed) * GAMMA + np.uint64(1))
    k = _mix64(k ^ (np.uint64(path_index) * PATH_SALT + np.uint64(1)))
    k = _mix64(k ^ (np.uint64(stream) * STREAM_SALT + np.uint64(1)))
    return k


@njit(cache=True, inline="always")
def _uniform(key, counter):
    bits = _mix64(key + np.uint64(counter) * GAMMA)
    return (float(bits >> np.uint64(11)) + 0.5) * _INV_2_53


@njit(cache=True, fastmath=True)
def _path_sl2(seed, path_index, horizon, eps):
    """Endpoint 2x2 matrix of one geodesic random walk of the given horizon."""
    dt = eps * eps / (2.0 * SL2_DIM)
    nsteps = int(math.ceil(horizon / dt - 1e-12)) if horizon > 0.0 else 0
    key = _stream_key(seed, path_index, 0)
    ch = math.cosh(eps / _SQRT2)
    sh = math.sinh(eps / _SQRT2)
    m00 = 1.0
    m01 = 0.0
    m10 = 0.0
    m11 = 1.0
    ctr = np.uint64(0)
    for k in range(nsteps):
        # uniform circle direction without trig: a point uniform in the
        # disk gives (cos 2t, sin 2t) = ((a^2 - b^2)/r^2, 2ab/r^2) with
        # t uniform, by the double-angle map
        while True:
            a = 2.0 * _uniform(key, ctr) - 1.0
            b = 2.0 * _uniform(key, ctr + _ONE) - 1.0
            ctr += _TWO
            r2 = a * a + b * b
            if 0.0 < r2 <= 1.0:
                break
        inv = 1.0 / r2
        c = (a * a - b * b) * inv
        s = 2.0 * a * b * inv
        # exp(eps * (cos B1 + sin B2)) with B1 = diag(1,-1)/sqrt2,
        # B2 = offdiag(1,1)/sqrt2: cosh * I + sinh * [[c, s], [s, -c]]
        e00 = ch + sh * c
        e01 = sh * s
        e11 = ch - sh * c
        t00 = m00 * e00 + m01 * e01
        t01 = m00 * e01 + m01 * e11
        t10 = m10 * e00 + m11 * e01
        t11 = m10 * e01 + m11 * e11
        m00, m01, m10, m11 = t00, t01, t10, t11
    out = np.empty((2, 2))
    out[0, 0] = m00
    out[0, 1] = m01
    out[1, 0] = m10
    out[1, 1] = m11
    return out


@njit(cache=True)
def _nak3(w):
    """NAK of a well-conditioned 3x3 matrix by row Gram-Schmidt, bottom up."""
    n = np.eye(3)
    a = np.empty(3)
    k = np.empty((3, 3))
    r2 = w[2].copy()
    a[2] = math.sqrt(r2[0] ** 2 + r2[1] ** 2 + r2[2] ** 2)
    k[2] = r2 / a[2]
    c12 = w[1, 0] * k[2, 0] + w[1, 1] * k[2, 1] + w[1, 2] * k[2, 2]
    r1 = w[1] - c12 * k[2]
    a[1] = math.sqrt(r1[0] ** 2 + r1[1] ** 2 + r1[2] ** 2)
    k[1] = r1 / a[1]
    c02 = w[0, 0] * k[2, 0] + w[0, 1] * k[2, 1] + w[0, 2] * k[2, 2]
    c01 = w[0, 0] * k[1, 0] + w[0, 1] * k[1, 1] + w[0, 2] * k[1, 2]
    r0 = w[0] - c02 * k[2] - c01 * k[1]
    a[0] = math.sqrt(r0[0] ** 2 + r0[1] ** 2 + r0[2] ** 2)
    k[0] = r0 / a[0]
    n[1, 2] = c12 / a[2]
    n[0, 2] = c02 / a[2]
    n[0, 1] = c01 / a[1]
    return n, a, k


@njit(cache=True)
def _merge_sl3(n, h, w):
    """Fold a window product w into the factored point n * diag(exp(h))."""
    nw, aw, _ = _nak3(w)
    # conjugate the window's unit-triangular factor past diag(exp(h))
    s01 = nw[0, 1] * math.exp(h[0] - h[1])
    s02 = nw[0, 2] * math.exp(h[0] - h[2])
    s12 = nw[1, 2] * math.exp(h[1] - h[2])
    out = np.empty((3, 3))
    for i in range(3):
        out[i, 0] = n[i, 0]
        out[i, 1] = n[i, 0] * s01 + n[i, 1]
        out[i, 2] = n[i, 0] * s02 + n[i, 1] * s12 + n[i, 2]
    for i in range(3):
        h[i] = h[i] + math.log(aw[i])
    return out


@njit(cache=True, inline="always")
def _polar_pair(key, ctr):
    """Two standard normals by the polar rejection method; returns the
    advanced counter as the third component."""
    while True:
        a = 2.0 * _uniform(key, ctr) - 1.0
        b = 2.0 * _uniform(key, ctr + _ONE) - 1.0
        ctr += _TWO
        r2 = a * a + b * b
        if 0.0 < r2 <= 1.0:
            f = math.sqrt(-2.0 * math.log(r2) / r2)
            return a * f, b * f, ctr


@njit(cache=True, inline="always")
def _mm3(a, b, out):
    for i in range(3):
        a0 = a[i, 0]
        a1 = a[i, 1]
        a2 = a[i, 2]
        out[i, 0] = a0 * b[0, 0] + a1 * b[1, 0] + a2 * b[2, 0]
        out[i, 1] = a0 * b[0, 1] + a1 * b[1, 1] + a2 * b[2, 1]
        out[i, 2] = a0 * b[0, 2] + a1 * b[1, 2] + a2 * b[2, 2]


@njit(cache=True, inline="always")
def _expm_sym3(x, e, tmp):
    """Order-6 Horner Taylor exponential into e; enough for |x| <= 0.05."""
    for i in range(3):
        e[i, 0] = x[i, 0] / 6.0
        e[i, 1] = x[i, 1] / 6.0
        e[i, 2] = x[i, 2] / 6.0
        e[i, i] += 1.0
    for m in range(5):
        inv = 1.0 / (5.0 - m)
        _mm3(x, e, tmp)
        for i in range(3):
            e[i, 0] = inv * tmp[i, 0]
            e[i, 1] = inv * tmp[i, 1]
            e[i, 2] = inv * tmp[i, 2]
            e[i, i] += 1.0


@njit(cache=True, fastmath=True)
def _path_sl3(seed, path_index, horizon, eps):
    """Factored NA endpoint (n, h) of one SL(3,R) geodesic random walk."""
    dt = eps * eps / (2.0 * SL3_DIM)
    nsteps = int(math.ceil(horizon / dt - 1e-12)) if horizon > 0.0 else 0
    key = _stream_key(seed, path_index, 0)
    n = np.eye(3)
    h = np.zeros(3)
    w = np.eye(3)
    x = np.empty((3, 3))
    e = np.empty((3, 3))
    tmp = np.empty((3, 3))
    ctr = np.uint64(0)
    since_merge = 0
    for k in range(nsteps):
        # five-dimensional unit direction from three normal pairs
        v0, v1, ctr = _polar_pair(key, ctr)
        v2, v3, ctr = _polar_pair(key, ctr)
        v4, v5, ctr = _polar_pair(key, ctr)
        norm = math.sqrt(v0 * v0 + v1 * v1 + v2 * v2 + v3 * v3 + v4 * v4)
        if norm < 1e-300:
            continue
        s = eps / norm
        v0 *= s
        v1 *= s
        v2 *= s
        v3 *= s
        v4 *= s
        # X = v0 D1 + v1 D2 + v2 E01 + v3 E02 + v4 E12 in the trace-form
        # orthonormal basis of the symmetric traceless matrices
        x[0, 0] = v0 / _SQRT2 + v1 / _SQRT6
        x[1, 1] = -v0 / _SQRT2 + v1 / _SQRT6
        x[2, 2] = -2.0 * v1 / _SQRT6
        x[0, 1] = v2 / _SQRT2
        x[1, 0] = x[0, 1]
        x[0, 2] = v3 / _SQRT2
        x[2, 0] = x[0, 2]
        x[1, 2] = v4 / _SQRT2
        x[2, 1] = x[1, 2]
        _expm_sym3(x, e, tmp)
        _mm3(w, e, tmp)
        w, tmp = tmp, w
        since_merge += 1
        if since_merge == WINDOW:
            n = _merge_sl3(n, h, w)
            for i in range(3):
                w[i, 0] = 0.0
                w[i, 1] = 0.0
                w[i, 2] = 0.0
                w[i, i] = 1.0
            since_merge = 0
    if since_merge > 0:
        n = _merge_sl3(n, h, w)
    return n, h


@njit(cache=True, parallel=True)
def run_paths_sl2(seed, path_indices, horizons, eps):
    p = len(path_indices)
    out = np.empty((p, 2, 2))
    for i in prange(p):
        out[i] = _path_sl2(seed, path_indices[i], horizons[i], eps)
    return out


@njit(cache=True, parallel=True)
def run_paths_sl3(seed, path_indices, horizons, eps):
    p = len(path_indices)
    n_out = np.empty((p, 3, 3))
    h_out = np.empty((p, 3))
    for i in prange(p):
        n, h = _path_sl3(seed, path_indices[i], horizons[i], eps)
        n_out[i] = n
        h_out[i] = h
    return n_out, h_out


@njit(cache=True)
def uniform_probe(seed, path_index, stream, counters):
    """Test hook: compiled uniforms at explicit counters, to pin against the
    pure-python mirror."""
    key = _stream_key(seed, path_index, stream)
    out = np.empty(len(counters))
    for i in range(len(counters)):
        out[i] = _uniform(key, counters[i])
    return out
