import math

import numpy as np
import pytest
from scipy.linalg import expm

from chamberflow import _engine, _rng, diffusion, disk
from chamberflow.decomp import GroupElement
from chamberflow.diffusion import (
    BoundaryPoint,
    DiffusionConfig,
    exit_direction,
    kb_horizon,
    kb_sample,
    log_singular_values_na,
    modular_function,
    poisson_kernel,
    radial_components,
    simulate_many,
    simulate_path,
)
from chamberflow.errors import UsageError
from chamberflow.rootdata import build_root_system

SQRT2 = math.sqrt(2.0)
SQRT6 = math.sqrt(6.0)


# -- counter RNG: compiled engine against the pure-python mirror --------------


def test_uniform_probe_matches_python_mirror():
    counters = np.array([0, 1, 2, 5, 1000, 2**40, 2**63], dtype=np.uint64)
    for seed, pidx, stream in ((0, 0, 0), (7, 3, 1), (12345, 999, 0)):
        got = _engine.uniform_probe(seed, pidx, stream, counters)
        key = _rng.stream_key(seed, pidx, stream)
        want = _rng.uniform(key, counters)
        assert np.array_equal(got, want)


def test_uniforms_are_strictly_inside_unit_interval():
    key = _rng.stream_key(3, 0, 0)
    u = _rng.uniform(key, np.arange(10_000, dtype=np.uint64))
    assert np.all(u > 0.0) and np.all(u < 1.0)
    assert abs(u.mean() - 0.5) < 0.02


def test_uniform_int_range():
    key = _rng.stream_key(3, 0, 1)
    draws = _rng.uniform_int(key, np.arange(5000, dtype=np.uint64), 64)
    assert draws.min() >= 0 and draws.max() <= 63
    assert len(np.unique(draws)) == 64


# -- step-by-step replays of the compiled walks --------------------------------


def _mirror_uniform(key, ctr):
    return float(_rng.uniform(key, np.uint64(ctr)))


def _replay_sl2(seed, pidx, nsteps, eps):
    key = _rng.stream_key(seed, pidx, 0)
    ch, sh = math.cosh(eps / SQRT2), math.sinh(eps / SQRT2)
    m = np.eye(2)
    ctr = 0
    for _ in range(nsteps):
        while True:
            a = 2.0 * _mirror_uniform(key, ctr) - 1.0
            b = 2.0 * _mirror_uniform(key, ctr + 1) - 1.0
            ctr += 2
            r2 = a * a + b * b
            if 0.0 < r2 <= 1.0:
                break
        c = (a * a - b * b) / r2
        s = 2.0 * a * b / r2
        m = m @ np.array([[ch + sh * c, sh * s], [sh * s, ch - sh * c]])
    return m


def test_sl2_engine_matches_replay():
    seed, pidx, eps, nsteps = 5, 2, 0.02, 1000
    horizon = nsteps * eps * eps / 4.0
    got = _engine._path_sl2(seed, pidx, horizon, eps)
    want = _replay_sl2(seed, pidx, nsteps, eps)
    assert np.max(np.abs(got - want)) < 1e-11


def _polar_pair(key, ctr):
    while True:
        a = 2.0 * _mirror_uniform(key, ctr) - 1.0
        b = 2.0 * _mirror_uniform(key, ctr + 1) - 1.0
        ctr += 2
        r2 = a * a + b * b
        if 0.0 < r2 <= 1.0:
            f = math.sqrt(-2.0 * math.log(r2) / r2)
            return a * f, b * f, ctr


def _nak_drop(m):
    """Row Gram-Schmidt from the bottom: the NA part, orthogonal factor dropped."""
    k2 = m[2] / np.linalg.norm(m[2])
    c12 = m[1] @ k2
    r1 = m[1] - c12 * k2
    a1 = np.linalg.norm(r1)
    k1 = r1 / a1
    c02, c01 = m[0] @ k2, m[0] @ k1
    a0 = np.linalg.norm(m[0] - c02 * k2 - c01 * k1)
    return np.array([
        [a0, c01, c02],
        [0.0, a1, c12],
        [0.0, 0.0, np.linalg.norm(m[2])],
    ])


def _replay_sl3(seed, pidx, nsteps, eps):
    """Brute-force product with scipy expm, dropping the orthogonal factor at
    the same window boundaries as the compiled kernel (that drop changes the
    path but not its law, and within a window the two agree exactly)."""
    key = _rng.stream_key(seed, pidx, 0)
    m = np.eye(3)
    ctr = 0
    since = 0
    for _ in range(nsteps):
        v0, v1, ctr = _polar_pair(key, ctr)
        v2, v3, ctr = _polar_pair(key, ctr)
        v4, _, ctr = _polar_pair(key, ctr)
        s = eps / math.sqrt(v0 * v0 + v1 * v1 + v2 * v2 + v3 * v3 + v4 * v4)
        x = np.array([
            [s * v0 / SQRT2 + s * v1 / SQRT6, s * v2 / SQRT2, s * v3 / SQRT2],
            [s * v2 / SQRT2, -s * v0 / SQRT2 + s * v1 / SQRT6, s * v4 / SQRT2],
            [s * v3 / SQRT2, s * v4 / SQRT2, -2.0 * s * v1 / SQRT6],
        ])
        m = m @ expm(x)
        since += 1
        if since == _engine.WINDOW:
            m = _nak_drop(m)
            since = 0
    return m


@pytest.mark.parametrize("nsteps", [1, 100, 257, 1000])
def test_sl3_engine_matches_replay_singular_values(nsteps):
    seed, pidx, eps = 9, 3, 0.02
    horizon = nsteps * eps * eps / 10.0
    n, h = _engine._path_sl3(seed, pidx, horizon, eps)
    got = np.linalg.svd(n * np.exp(h)[None, :], compute_uv=False)
    want = np.linalg.svd(_replay_sl3(seed, pidx, nsteps, eps), compute_uv=False)
    assert np.max(np.abs(got / want - 1.0)) < 1e-12


# -- simulation API -------------------------------------------------------------


def test_config_validation():
    with pytest.raises(UsageError):
        DiffusionConfig(group_id="so3")
    with pytest.raises(UsageError):
        DiffusionConfig(group_id="sl2", step_length=0.06)
    with pytest.raises(UsageError):
        DiffusionConfig(group_id="sl2", step_length=0.0)
    with pytest.raises(UsageError):
        DiffusionConfig(group_id="sl2", paths=0)
    with pytest.raises(UsageError):
        DiffusionConfig(group_id="sl2", horizon=-1.0)


def test_time_per_step():
    assert DiffusionConfig(group_id="sl2", step_length=0.02).time_per_step == pytest.approx(1e-4)
    assert DiffusionConfig(group_id="sl3", step_length=0.02).time_per_step == pytest.approx(4e-5)


@pytest.mark.parametrize("group_id", ["sl2", "sl3"])
def test_horizon_zero_is_identity(group_id):
    cfg = DiffusionConfig(group_id=group_id, seed=1, horizon=0.0)
    g = simulate_path(cfg, 0)
    assert np.array_equal(g.entries, np.eye(g.n))


@pytest.mark.parametrize("group_id", ["sl2", "sl3"])
def test_determinism_and_batch_consistency(group_id):
    cfg = DiffusionConfig(group_id=group_id, seed=4, paths=5, horizon=0.5)
    a = simulate_path(cfg, 3)
    b = simulate_path(cfg, 3)
    assert np.array_equal(a.entries, b.entries)
    batch = simulate_many(cfg)
    assert np.array_equal(batch.endpoints[3].entries, a.entries)
    assert np.array_equal(batch.na_n[3] * np.exp(batch.na_h[3])[None, :], a.entries)


def test_endpoints_are_na_form():
    cfg = DiffusionConfig(group_id="sl3", seed=2, paths=3, horizon=1.0)
    for g in simulate_many(cfg).endpoints:
        m = g.entries
        assert np.allclose(np.tril(m, -1), 0.0)
        assert np.all(np.diag(m) > 0)
        g.validate()


@pytest.mark.parametrize("group_id,t,paths,tol_frac", [("sl2", 20.0, 256, 0.10),
                                                       ("sl3", 10.0, 128, 0.15)])
def test_radial_drift_smoke(group_id, t, paths, tol_frac):
    rs = build_root_system(group_id)
    cfg = DiffusionConfig(group_id=group_id, seed=7, paths=paths, horizon=t)
    est = radial_components(simulate_many(cfg)).mean(axis=0) / t
    target = rs.two_rho.coords
    assert np.max(np.abs(est - target)) <= tol_frac * np.linalg.norm(target)


def test_kb_horizon_and_degenerate_average():
    cfg = DiffusionConfig(group_id="sl2", seed=3)
    assert kb_horizon(cfg, 1, 0) == 0
    g = kb_sample(cfg, 1, 5)
    assert np.array_equal(g.entries, np.eye(2))
    draws = [kb_horizon(cfg, 64, i) for i in range(2000)]
    assert min(draws) >= 0 and max(draws) <= 63
    with pytest.raises(UsageError):
        kb_horizon(cfg, 0, 0)


def test_kb_split_sample_means_agree():
    # a bounded test function of the radial part on two disjoint halves
    cfg = DiffusionConfig(group_id="sl2", seed=11)
    s = diffusion.kb_sample_many(cfg, 16, 2000)
    r = radial_components(s)[:, 0]
    f = np.exp(-((r / 4.0) ** 2))
    a, b = f[:1000], f[1000:]
    se = math.sqrt((a.var(ddof=1) + b.var(ddof=1)) / 1000.0)
    assert abs(a.mean() - b.mean()) < 3.0 * se


# -- radial extraction ----------------------------------------------------------


def test_log_singular_values_moderate_spread():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = np.eye(3)
        n[0, 1], n[0, 2], n[1, 2] = rng.normal(size=3)
        h = rng.normal(size=3)
        h -= h.mean()
        got = log_singular_values_na(n, h)
        want = np.log(np.linalg.svd(n * np.exp(h)[None, :], compute_uv=False))
        assert np.max(np.abs(got - want)) < 1e-10


def _mp_oracle(n, h):
    import mpmath

    with mpmath.workdps(300):
        m = mpmath.matrix(3)
        for i in range(3):
            for j in range(3):
                m[i, j] = mpmath.mpf(float(n[i, j])) * mpmath.exp(mpmath.mpf(float(h[j])))
        s = mpmath.svd_r(m, compute_uv=False)
        return np.array(sorted((float(mpmath.log(x)) for x in s), reverse=True))


def test_log_singular_values_large_spread():
    rng = np.random.default_rng(1)
    n = np.eye(3)
    n[0, 1], n[0, 2], n[1, 2] = rng.normal(size=3)
    h = np.array([200.0, 1.0, -201.0])
    got = log_singular_values_na(n, h)
    assert np.max(np.abs(got - _mp_oracle(n, h))) < 1e-8


def test_log_singular_values_near_degenerate_pair():
    rng = np.random.default_rng(2)
    n = np.eye(3)
    n[0, 1], n[0, 2], n[1, 2] = rng.normal(size=3)
    h = np.array([40.0, 39.5, -79.5])
    got = log_singular_values_na(n, h)
    assert np.max(np.abs(got - _mp_oracle(n, h))) < 1e-8


def test_radial_components_ordered_and_traceless():
    cfg = DiffusionConfig(group_id="sl3", seed=5, paths=8, horizon=20.0)
    r = radial_components(simulate_many(cfg))
    assert np.all(np.diff(r, axis=1) <= 0)
    assert np.max(np.abs(r.sum(axis=1))) < 1e-8


def test_radial_component_na_rejects_non_na():
    with pytest.raises(UsageError):
        diffusion.radial_component_na(
            GroupElement(np.array([[0.0, 1.0], [-1.0, 0.0]]), "sl2")
        )


# -- boundary operations ---------------------------------------------------------


def test_exit_direction_of_pure_radial():
    g = GroupElement(np.diag([math.e, 1.0 / math.e]), "sl2")
    assert exit_direction(g).angle == pytest.approx(0.0, abs=1e-12)


def test_exit_direction_of_rotated_radial():
    for phi in (0.3, 0.7, 2.5):
        c, s = math.cos(phi), math.sin(phi)
        k = np.array([[c, -s], [s, c]])
        g = GroupElement(k @ np.diag([math.e, 1.0 / math.e]), "sl2")
        assert exit_direction(g).angle == pytest.approx(phi % math.pi, abs=1e-12)


def test_exit_direction_wall_sample_is_flagged():
    assert exit_direction(GroupElement(np.eye(2), "sl2")) is None
    with pytest.raises(UsageError):
        exit_direction(GroupElement(np.eye(3), "sl3"))


def test_boundary_point_wraps():
    assert BoundaryPoint(2.0 * math.pi + 0.25).angle == pytest.approx(0.25)


def test_poisson_kernel_normalization_at_basepoint():
    e = GroupElement(np.eye(2), "sl2")
    for angle in (0.0, 1.0, 3.0, 5.5):
        assert poisson_kernel(e, BoundaryPoint(angle)) == pytest.approx(1.0)


def test_poisson_kernel_increases_toward_its_boundary_point():
    xi = BoundaryPoint(0.0)
    values = []
    for z in (0.2, 0.4, 0.6):
        g = GroupElement(disk.sl2_from_su11(*disk.translation_to(z)), "sl2")
        values.append(poisson_kernel(g, xi))
    assert values[0] < values[1] < values[2]


def test_modular_function_on_unipotents_and_diagonal():
    for x in (-1.5, 0.0, 2.0):
        n = GroupElement(np.array([[1.0, x], [0.0, 1.0]]), "sl2")
        assert abs(modular_function(n) - 1.0) <= 1e-10
    a = GroupElement(np.diag([math.exp(0.5), math.exp(-0.5)]), "sl2")
    assert modular_function(a) == pytest.approx(math.exp(1.0), rel=1e-12)


def test_modular_function_multiplicative():
    rng = np.random.default_rng(6)
    for _ in range(50):
        u1, x1, u2, x2 = rng.uniform(-1, 1, size=4)
        g1 = GroupElement(
            np.array([[math.exp(u1), x1 * math.exp(-u1)], [0.0, math.exp(-u1)]]), "sl2"
        )
        g2 = GroupElement(
            np.array([[math.exp(u2), x2 * math.exp(-u2)], [0.0, math.exp(-u2)]]), "sl2"
        )
        lhs = modular_function(g1 @ g2)
        rhs = modular_function(g1) * modular_function(g2)
        assert abs(lhs - rhs) / rhs <= 1e-10


def test_modular_function_rejects_non_na():
    with pytest.raises(UsageError):
        modular_function(GroupElement(np.array([[0.0, 1.0], [-1.0, 0.0]]), "sl2"))
    with pytest.raises(UsageError):
        modular_function(GroupElement(np.eye(3), "sl3"))
