"""Restricted root data for the split groups SL(2,R) and SL(3,R).

The flat piece ``a`` is the space of traceless diagonal n x n matrices,
carrying the trace form ``<X, Y> = tr(XY)``.  A chamber vector is stored as
its full diagonal (n coordinates summing to zero), so for SL(2,R) the rank
is 1 but coordinates have length 2.  Roots are stored through their metric
duals: the root ``e_i - e_j`` pairs with ``H`` as ``h_i - h_j``, which is the
trace-form inner product with the vector ``e_i - e_j``.

The half-sum of positive roots (each with multiplicity 1 for these split
groups) is precomputed; it satisfies ``<rho, coroot(alpha)> = 1`` for every
simple root, which is the identity the test suite pins the normalization to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError

# Vectors closer than this to a chamber wall are treated as singular by
# downstream tie-breaking (see the chamber-field construction).
WALL_TOLERANCE = 1e-9

_GROUP_SIZES = {"sl2": 2, "sl3": 3}


@dataclass(frozen=True)
class ChamberVector:
    """Element of the flat ``a``, stored as the diagonal of a traceless matrix."""

    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float))
        if self.coords.ndim != 1:
            raise UsageError("chamber vector must be a flat coordinate array")
        if not np.all(np.isfinite(self.coords)):
            raise UsageError("chamber vector has non-finite coordinates")

    @property
    def n(self) -> int:
        return len(self.coords)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))

    def __add__(self, other: "ChamberVector") -> "ChamberVector":
        return ChamberVector(self.coords + other.coords)

    def __mul__(self, s: float) -> "ChamberVector":
        return ChamberVector(self.coords * s)

    __rmul__ = __mul__

    def __neg__(self) -> "ChamberVector":
        return ChamberVector(-self.coords)


@dataclass(frozen=True)
class Root:
    """A restricted root, stored as its trace-form dual vector."""

    functional: np.ndarray
    multiplicity: int = 1
    double_multiplicity: int = 0

    def __post_init__(self):
        object.__setattr__(self, "functional", np.asarray(self.functional, dtype=float))


@dataclass(frozen=True)
class RootSystem:
    """Root data for one of the supported split groups."""

    group_id: str
    rank: int
    positive_roots: tuple
    simple_roots: tuple  # the indecomposable positive roots
    weyl_vector: ChamberVector
    weyl_group_order: int
    n: int = field(default=0)

    # -- pairings and chamber geometry -------------------------------------

    def pair(self, root: Root, h: ChamberVector) -> float:
        """Trace-form pairing ``<alpha, H>``."""
        if len(root.functional) != h.n:
            raise UsageError(
                f"dimension mismatch: root lives in R^{len(root.functional)}, "
                f"vector in R^{h.n}"
            )
        return float(root.functional @ h.coords)

    def chamber_distance(self, h: ChamberVector) -> float:
        """min over positive roots of ``<alpha, H>``.

        Positive iff ``H`` is chamber-interior, zero on walls, negative
        outside the closed chamber.
        """
        return min(self.pair(a, h) for a in self.positive_roots)

    def weyl_reduce(self, h: ChamberVector) -> ChamberVector:
        """Unique Weyl-orbit representative in the closed positive chamber.

        For sl(n) the Weyl group permutes diagonal entries, so this is a
        nonincreasing sort.  Idempotent.
        """
        if h.n != self.n:
            raise UsageError("vector does not belong to this root system")
        return ChamberVector(np.sort(h.coords)[::-1])

    # -- derived quantities -------------------------------------------------

    @property
    def rho(self) -> ChamberVector:
        return self.weyl_vector

    @property
    def two_rho(self) -> ChamberVector:
        return ChamberVector(2.0 * self.weyl_vector.coords)

    def rho_norm_sq(self) -> float:
        return float(self.weyl_vector.coords @ self.weyl_vector.coords)

    def coroot(self, root: Root) -> np.ndarray:
        a = root.functional
        return 2.0 * a / float(a @ a)

    def vector_from_pairings(self, y) -> ChamberVector:
        """The ``H`` with ``<alpha_i, H> = y_i`` for the simple roots."""
        y = np.asarray(y, dtype=float)
        if len(y) != self.rank:
            raise UsageError(f"expected {self.rank} pairing coordinates")
        gram = self.simple_gram()
        c = np.linalg.solve(gram, y)
        coords = sum(
            ci * a.functional for ci, a in zip(c, self.simple_roots)
        )
        return ChamberVector(coords)

    def simple_gram(self) -> np.ndarray:
        k = self.rank
        g = np.empty((k, k))
        for i, a in enumerate(self.simple_roots):
            for j, b in enumerate(self.simple_roots):
                g[i, j] = float(a.functional @ b.functional)
        return g

    def norm_from_pairings(self, y) -> float:
        """Trace-form norm of ``vector_from_pairings(y)`` without building it."""
        y = np.asarray(y, dtype=float)
        ginv = np.linalg.inv(self.simple_gram())
        return float(np.sqrt(y @ ginv @ y))

    def to_json_dict(self) -> dict:
        return {
            "group": self.group_id,
            "rank": self.rank,
            "matrix_size": self.n,
            "positive_roots": [r.functional.tolist() for r in self.positive_roots],
            "simple_roots": [r.functional.tolist() for r in self.simple_roots],
            "multiplicities": [r.multiplicity for r in self.positive_roots],
            "weyl_vector": self.weyl_vector.coords.tolist(),
            "weyl_group_order": self.weyl_group_order,
        }


def build_root_system(group_id: str) -> RootSystem:
    """Tabulate the A1 or A2 restricted root data with rho precomputed."""
    if group_id not in _GROUP_SIZES:
        raise UsageError(f"unsupported group {group_id!r}; expected 'sl2' or 'sl3'")
    n = _GROUP_SIZES[group_id]
    positive = []
    for i in range(n):
        for j in range(i + 1, n):
            v = np.zeros(n)
            v[i], v[j] = 1.0, -1.0
            positive.append(Root(v))
    # e_i - e_j is indecomposable exactly when j = i + 1
    simple = tuple(
        r
        for r in positive
        if np.count_nonzero(r.functional) == 2
        and np.flatnonzero(r.functional)[1] - np.flatnonzero(r.functional)[0] == 1
    )
    rho = ChamberVector(0.5 * sum(r.multiplicity * r.functional for r in positive))
    return RootSystem(
        group_id=group_id,
        rank=n - 1,
        positive_roots=tuple(positive),
        simple_roots=simple,
        weyl_vector=rho,
        weyl_group_order=math.factorial(n),
        n=n,
    )
