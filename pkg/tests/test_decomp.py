import math

import numpy as np
import pytest

from chamberflow.decomp import GroupElement, cartan, identity, iwasawa, radial_component
from chamberflow.errors import NumericalError, UsageError
from chamberflow.rootdata import build_root_system


def random_unimodular(rng, n):
    m = rng.normal(size=(n, n))
    if np.linalg.det(m) < 0:
        m[[0, 1]] = m[[1, 0]]
    return m / np.linalg.det(m) ** (1.0 / n)


def jacobi_singular_values(m):
    """Independent singular values by one-sided Jacobi column rotations."""
    a = np.array(m, dtype=float, copy=True)
    n = a.shape[1]
    for _ in range(60):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                x = float(a[:, p] @ a[:, p])
                y = float(a[:, q] @ a[:, q])
                z = float(a[:, p] @ a[:, q])
                off = max(off, abs(z) / math.sqrt(x * y))
                if abs(z) <= 1e-16 * math.sqrt(x * y):
                    continue
                tau = (y - x) / (2.0 * z)
                t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.hypot(1.0, t)
                s = c * t
                ap = a[:, p].copy()
                a[:, p] = c * ap - s * a[:, q]
                a[:, q] = s * ap + c * a[:, q]
        if off < 1e-15:
            break
    return np.sort(np.linalg.norm(a, axis=0))[::-1]


@pytest.mark.parametrize("group_id,n", [("sl2", 2), ("sl3", 3)])
def test_iwasawa_round_trip_and_structure(group_id, n):
    rng = np.random.default_rng(11)
    for _ in range(200):
        g = GroupElement(random_unimodular(rng, n), group_id)
        trip = iwasawa(g)
        nm, am, km = trip.n_part.entries, trip.a_part.entries, trip.k_part.entries
        assert np.max(np.abs(trip.reconstruct().entries - g.entries)) < 1e-9
        # N unit upper triangular
        assert np.allclose(np.tril(nm, -1), 0.0)
        assert np.allclose(np.diag(nm), 1.0)
        # A positive diagonal, unit determinant
        assert np.allclose(am, np.diag(np.diag(am)))
        assert np.all(np.diag(am) > 0)
        assert np.prod(np.diag(am)) == pytest.approx(1.0, abs=1e-9)
        # K special orthogonal
        assert np.max(np.abs(km @ km.T - np.eye(n))) < 1e-12
        assert np.linalg.det(km) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("group_id,n", [("sl2", 2), ("sl3", 3)])
def test_cartan_round_trip_and_chamber(group_id, n):
    rng = np.random.default_rng(12)
    rs = build_root_system(group_id)
    for _ in range(200):
        g = GroupElement(random_unimodular(rng, n), group_id)
        trip = cartan(g)
        assert np.max(np.abs(trip.reconstruct().entries - g.entries)) < 1e-9
        for k in (trip.k1.entries, trip.k2.entries):
            assert np.max(np.abs(k @ k.T - np.eye(n))) < 1e-12
            assert np.linalg.det(k) == pytest.approx(1.0, abs=1e-10)
        s = np.diag(trip.a_part.entries)
        assert np.all(np.diff(s) <= 1e-15)
        assert rs.chamber_distance(radial_component(g)) > -1e-10


@pytest.mark.parametrize("group_id,n", [("sl2", 2), ("sl3", 3)])
def test_cartan_middle_factor_matches_jacobi_oracle(group_id, n):
    rng = np.random.default_rng(13)
    for _ in range(50):
        g = GroupElement(random_unimodular(rng, n), group_id)
        s = np.diag(cartan(g).a_part.entries)
        oracle = jacobi_singular_values(g.entries)
        assert np.max(np.abs(s - oracle)) < 1e-10


def test_iwasawa_of_triangular_is_itself():
    m = np.array([[2.0, 3.0], [0.0, 0.5]])
    trip = iwasawa(GroupElement(m, "sl2"))
    assert np.allclose(trip.n_part.entries, [[1.0, 6.0], [0.0, 1.0]], atol=1e-14)
    assert np.allclose(np.diag(trip.a_part.entries), [2.0, 0.5], atol=1e-14)
    assert np.allclose(trip.k_part.entries, np.eye(2), atol=1e-14)


def test_radial_component_of_diagonal():
    g = GroupElement(np.diag([math.e, 1.0, 1.0 / math.e]), "sl3")
    assert np.allclose(radial_component(g).coords, [1.0, 0.0, -1.0], atol=1e-12)


def test_identity_element():
    assert np.array_equal(identity("sl3").entries, np.eye(3))


def test_validation_rejects_bad_input():
    with pytest.raises(UsageError):
        GroupElement(np.eye(2), "su2")
    with pytest.raises(UsageError):
        GroupElement(np.eye(3), "sl2")
    with pytest.raises(NumericalError):
        GroupElement(2.0 * np.eye(2), "sl2").validate()
    with pytest.raises(NumericalError):
        GroupElement(np.array([[np.inf, 0.0], [0.0, 1.0]]), "sl2").validate()
    with pytest.raises(NumericalError):
        iwasawa(GroupElement(np.diag([1.0, -1.0]), "sl2"))


def test_validate_accepts_huge_unimodular():
    # relative determinant check must not reject large-entry elements
    g = GroupElement(np.diag([1e150, 1e-150]), "sl2")
    g.validate()


def test_group_multiplication():
    a = GroupElement(np.diag([2.0, 0.5]), "sl2")
    b = GroupElement(np.array([[1.0, 1.0], [0.0, 1.0]]), "sl2")
    assert np.allclose((a @ b).entries, a.entries @ b.entries)
