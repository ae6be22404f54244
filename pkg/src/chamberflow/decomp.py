"""Iwasawa (NAK) and Cartan (KAK) factorizations for SL(2,R) and SL(3,R).

Conventions, fixed once so the factorizations are unique:

* Iwasawa order is N * A * K with N unit upper triangular, A positive
  diagonal with determinant one, K special orthogonal.  Computed as an RQ
  factorization (triangularize from the right), then the triangular factor
  is split into its unit part and its diagonal.
* Cartan is K1 * A * K2 with the diagonal of A equal to the singular values
  in nonincreasing order, both K factors special orthogonal.  When singular
  values repeat the orthogonal factors are not unique; only reconstruction
  and the chamber position of log(A) are guaranteed then.
* All comparisons use the max-abs entry norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NumericalError, UsageError
from .rootdata import ChamberVector

DET_TOL = 1e-10
RECONSTRUCT_TOL = 1e-9


@dataclass(frozen=True)
class GroupElement:
    """A unimodular real matrix, n in {2, 3}."""

    entries: np.ndarray
    group_id: str

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        object.__setattr__(self, "entries", m)
        n = {"sl2": 2, "sl3": 3}.get(self.group_id)
        if n is None:
            raise UsageError(f"unsupported group {self.group_id!r}")
        if m.shape != (n, n):
            raise UsageError(f"expected a {n}x{n} matrix for {self.group_id}")

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def validate(self) -> "GroupElement":
        """Raise if entries are non-finite or the determinant is off unity.

        The determinant check is relative (via slogdet) so that legitimately
        huge diffusion endpoints are not rejected by absolute round-off.
        """
        if not np.all(np.isfinite(self.entries)):
            raise NumericalError("matrix has non-finite entries")
        sign, logdet = np.linalg.slogdet(self.entries)
        if sign <= 0 or abs(logdet) > 1e-8:
            raise NumericalError(
                f"matrix is not unimodular (sign={sign}, log|det|={logdet:.3e})"
            )
        return self

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.entries @ other.entries, self.group_id)


def identity(group_id: str) -> GroupElement:
    n = {"sl2": 2, "sl3": 3}[group_id]
    return GroupElement(np.eye(n), group_id)


@dataclass(frozen=True)
class IwasawaTriple:
    n_part: GroupElement
    a_part: GroupElement
    k_part: GroupElement

    def reconstruct(self) -> GroupElement:
        return self.n_part @ self.a_part @ self.k_part


@dataclass(frozen=True)
class CartanTriple:
    k1: GroupElement
    a_part: GroupElement
    k2: GroupElement

    def reconstruct(self) -> GroupElement:
        return self.k1 @ self.a_part @ self.k2


def iwasawa(g: GroupElement) -> IwasawaTriple:
    """Factor g = n * a * k (unit upper triangular, positive diagonal, SO(n))."""
    g.validate()
    # RQ: g = R * Q with R upper triangular.  Flip signs so diag(R) > 0;
    # det(g) = 1 then forces det(Q) = +1.
    r, q = scipy.linalg.rq(g.entries)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    r = r * signs[np.newaxis, :]
    q = signs[:, np.newaxis] * q
    d = np.diag(r).copy()
    if np.any(d <= 0) or not np.all(np.isfinite(r)):
        raise NumericalError("triangularization produced a non-positive diagonal")
    n_mat = r / d[np.newaxis, :]
    gid = g.group_id
    return IwasawaTriple(
        GroupElement(n_mat, gid),
        GroupElement(np.diag(d), gid),
        GroupElement(q, gid),
    )


def cartan(g: GroupElement) -> CartanTriple:
    """Factor g = k1 * a * k2 with singular values nonincreasing on diag(a)."""
    if not np.all(np.isfinite(g.entries)):
        raise NumericalError("matrix has non-finite entries")
    u, s, vt = np.linalg.svd(g.entries)
    # numpy orders singular values descending already; make both orthogonal
    # factors special by flipping the last column pair if needed.
    if np.linalg.det(u) < 0:
        u = u.copy()
        vt = vt.copy()
        u[:, -1] *= -1.0
        vt[-1, :] *= -1.0
    gid = g.group_id
    return CartanTriple(
        GroupElement(u, gid),
        GroupElement(np.diag(s), gid),
        GroupElement(vt, gid),
    )


def radial_component(g: GroupElement) -> ChamberVector:
    """log of the Cartan middle factor; lies in the closed positive chamber."""
    trip = cartan(g)
    s = np.diag(trip.a_part.entries)
    if np.any(s <= 0):
        raise NumericalError("degenerate singular values")
    return ChamberVector(np.log(s))
