"""Schottky suspension quotient, radial chamber field and invariance tests.

A two-generator Schottky group acts on the disk; its fundamental domain is
the exterior of the four isometric circles, and reduction into the domain
terminates by ping-pong nesting.  Quotient points carry a transversal
mark, a boundary angle that the reduction word pushes along, realizing the
suspension identification (g, y) ~ (gamma g, gamma y).

Invariance of a lifted sample set under a right translation is measured
statistically: for a fixed dictionary of bounded test functions, the
paired difference mean f(q) - mean f(q.g) is reported in units of its
Monte Carlo standard error.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import disk
from .decomp import GroupElement, cartan, identity
from .diffusion import DiffusionConfig, kb_sample_many
from .errors import NumericalError, UsageError
from .rootdata import WALL_TOLERANCE

MAX_REDUCTION_STEPS = 10_000
ELEMENT_LABELS = ("g1", "g1inv", "g2", "g2inv")

FDICT_VERSION = "fdict-v1"
FDICT_NAMES = (
    "bump",
    "bump_re_pos",
    "bump_im_pos",
    "bump_cos_hol",
    "bump_cos_hol2",
    "bump_cos_mark",
    "bump_sin_mark",
    "bump_im_mix",
)


@dataclass(frozen=True)
class SchottkyGroup:
    """Two hyperbolic generators with disjoint isometric circles."""

    name: str
    generators: tuple  # the two GroupElements
    elements: tuple  # su11 pairs: g1, g1^-1, g2, g2^-1
    circle_centers: tuple  # isometric circle of each element
    circle_radii: tuple

    def __post_init__(self):
        for i in range(4):
            for j in range(i + 1, 4):
                gap = abs(self.circle_centers[i] - self.circle_centers[j])
                if gap <= self.circle_radii[i] + self.circle_radii[j]:
                    raise UsageError(
                        f"isometric circles {ELEMENT_LABELS[i]}/{ELEMENT_LABELS[j]} "
                        "overlap; not a Schottky configuration"
                    )

    def circle_index(self, z: complex):
        """Index of the isometric circle whose interior contains z, or None."""
        for i in range(4):
            if abs(z - self.circle_centers[i]) < self.circle_radii[i]:
                return i
        return None


def _isometric_circle(p: tuple) -> tuple:
    alpha, beta = p
    if beta == 0:
        raise UsageError("elliptic or identity generator has no isometric circle")
    return -alpha.conjugate() / beta.conjugate(), 1.0 / abs(beta)


def build_schottky(g1: GroupElement, g2: GroupElement, name: str) -> SchottkyGroup:
    p1 = disk.su11_from_sl2(g1.entries)
    p2 = disk.su11_from_sl2(g2.entries)
    elements = (p1, disk.su11_inv(p1), p2, disk.su11_inv(p2))
    circles = [_isometric_circle(p) for p in elements]
    return SchottkyGroup(
        name=name,
        generators=(g1, g2),
        elements=elements,
        circle_centers=tuple(c for c, _ in circles),
        circle_radii=tuple(r for _, r in circles),
    )


def schottky_preset(name: str = "schottky-a") -> SchottkyGroup:
    """The shipped group: translation length 3 along two axes at right angles."""
    if name != "schottky-a":
        raise UsageError(f"unknown preset {name!r}")
    s = 1.5
    g1 = np.diag([math.exp(s), math.exp(-s)])
    c, w = math.cos(math.pi / 4.0), math.sin(math.pi / 4.0)
    rot = np.array([[c, -w], [w, c]])
    g2 = rot @ g1 @ rot.T
    return build_schottky(
        GroupElement(g1, "sl2"), GroupElement(g2, "sl2"), name
    )


@dataclass(frozen=True)
class QuotientPoint:
    """Fundamental-domain representative plus the word that got it there."""

    representative: GroupElement
    word: tuple  # element indices applied on the left, in order

    def base_point(self) -> complex:
        return disk.base_point(disk.su11_from_sl2(self.representative.entries))


def _reduce_su11(p: tuple, group: SchottkyGroup, mark=None):
    """Left-reduce an su11 element into the fundamental domain.

    The mark, if given, rides along under the same left multiplications.
    """
    word = []
    for _ in range(MAX_REDUCTION_STEPS):
        z = disk.base_point(p)
        i = group.circle_index(z)
        if i is None:
            return p, tuple(word), mark
        gamma = group.elements[i]
        p = disk.su11_mul(gamma, p)
        if mark is not None:
            mark = disk.apply_boundary(gamma, mark)
        word.append(i)
    raise NumericalError(
        f"reduction did not terminate in {MAX_REDUCTION_STEPS} steps; "
        "the ping-pong data is broken"
    )


def schottky_reduce(g: GroupElement, group: SchottkyGroup) -> QuotientPoint:
    if g.group_id != "sl2":
        raise UsageError("the Schottky quotient lives over sl2")
    p = disk.su11_from_sl2(g.entries)
    z = disk.base_point(p)
    if group.circle_index(z) is None:
        # already reduced: keep the entries bitwise (idempotence contract)
        return QuotientPoint(g, ())
    p, word, _ = _reduce_su11(p, group)
    rep = GroupElement(disk.sl2_from_su11(*p), "sl2")
    return QuotientPoint(rep, word)


# -- radial chamber field -----------------------------------------------------


def radial_chamber_field(x: GroupElement) -> GroupElement:
    """The chamber frame k1 * a of the Cartan triple, canonical mod M.

    Wall-singular points (radial part within tolerance of a wall) take the
    deterministic tie-break: the representative with trivial k1, which for
    the basepoint itself is the identity.
    """
    trip = cartan(x)
    s = np.diag(trip.a_part.entries)
    h = np.log(s)
    gaps = np.diff(h)
    if h.max() - h.min() <= WALL_TOLERANCE:
        return identity(x.group_id)
    if np.any(-gaps <= WALL_TOLERANCE) and x.group_id == "sl3":
        # a single coincident pair: k1 is unique only up to a rotation in
        # that 2-plane; freeze it by zeroing the offending rotation angle
        k1 = _canonical_k(_snap_block(trip.k1.entries, gaps), x.group_id)
        return GroupElement(k1 @ trip.a_part.entries, x.group_id)
    k1 = _canonical_k(trip.k1.entries, x.group_id)
    return GroupElement(k1 @ trip.a_part.entries, x.group_id)


def _snap_block(k1: np.ndarray, gaps: np.ndarray) -> np.ndarray:
    # rotate the degenerate 2-plane so its first basis vector has no
    # component along the second column; deterministic and continuous off
    # the singular set
    j = int(np.argmax(-gaps <= WALL_TOLERANCE))
    block = k1[:, j : j + 2]
    q, _ = np.linalg.qr(block)
    out = k1.copy()
    out[:, j : j + 2] = q * np.sign(np.diag(q.T @ block))[np.newaxis, :]
    return out


def _canonical_k(k1: np.ndarray, group_id: str) -> np.ndarray:
    """Pick the representative of k1 * M with a fixed sign convention."""
    if group_id == "sl2":
        theta = math.atan2(k1[1, 0], k1[0, 0]) % math.pi
        c, s = math.cos(theta), math.sin(theta)
        return np.array([[c, -s], [s, c]])
    # sl3: M is the diagonal sign group with determinant one; flip column
    # signs so each of the first two columns has a positive extreme entry
    out = k1.copy()
    flips = 1.0
    for j in range(2):
        i = int(np.argmax(np.abs(out[:, j])))
        if out[i, j] < 0:
            out[:, j] *= -1.0
            flips *= -1.0
    out[:, 2] *= flips
    return out


# -- lifted sample sets -------------------------------------------------------


@dataclass
class LiftedSampleSet:
    group: SchottkyGroup
    seed: int
    n: int
    samples: list  # QuotientPoints
    marks: np.ndarray  # transversal boundary angles, one per sample
    kind: str = "lift"  # or "haar" for the synthetic control

    def __len__(self) -> int:
        return len(self.samples)


def build_lift(
    config: DiffusionConfig, group: SchottkyGroup, n: int, count: int
) -> LiftedSampleSet:
    """KB-averaged diffusion endpoints, framed, reduced and marked.

    Each sample is the chamber frame of a diffusion endpoint pushed into
    the fundamental domain; its mark starts as the frame's forward
    boundary angle and is carried along by the reduction word.
    """
    if config.group_id != "sl2":
        raise UsageError("the lift is implemented over sl2")
    if n < 1 or count < 1:
        raise UsageError("need n >= 1 and count >= 1")
    endpoints = kb_sample_many(config, n, count).endpoints
    samples = []
    marks = np.empty(count)
    for i, x in enumerate(endpoints):
        frame = radial_chamber_field(x)
        p = disk.su11_from_sl2(frame.entries)
        mark = disk.apply_boundary(p, 0.0)
        p, word, mark = _reduce_su11(p, group, mark)
        rep = GroupElement(disk.sl2_from_su11(*p), "sl2")
        samples.append(QuotientPoint(rep, word))
        marks[i] = mark
    return LiftedSampleSet(
        group=group, seed=config.seed, n=n, samples=samples, marks=marks
    )


def build_haar_control(
    group: SchottkyGroup, count: int, seed: int, radius_cap: float = 12.0
) -> LiftedSampleSet:
    """Synthetic fully invariant control: Haar on the fundamental domain.

    Base points follow the hyperbolic area law sinh(d) dd up to the radius
    cap, rejected into the fundamental domain; frame rotations and marks
    are uniform.  The radius cap truncates a region of negligible mass
    inside the domain but none of the test functions see it (they decay
    well before the cap).
    """
    if count < 1:
        raise UsageError("need count >= 1")
    rng = np.random.default_rng(seed)
    cosh_cap = math.cosh(radius_cap)
    samples = []
    marks = np.empty(count)
    for i in range(count):
        while True:
            u = rng.random()
            d = math.acosh(1.0 + u * (cosh_cap - 1.0))
            phi = 2.0 * math.pi * rng.random()
            z = math.tanh(0.5 * d) * cmath.exp(1j * phi)
            if group.circle_index(z) is None:
                break
        psi = 2.0 * math.pi * rng.random()
        p = disk.su11_mul(disk.translation_to(z), disk.rotation(psi))
        rep = GroupElement(disk.sl2_from_su11(*p), "sl2")
        samples.append(QuotientPoint(rep, ()))
        marks[i] = 2.0 * math.pi * rng.random()
    return LiftedSampleSet(
        group=group, seed=seed, n=0, samples=samples, marks=marks, kind="haar"
    )


def right_action(q: QuotientPoint, g: GroupElement, group: SchottkyGroup) -> QuotientPoint:
    if g.group_id != "sl2":
        raise UsageError("right translations must live in sl2")
    moved = GroupElement(q.representative.entries @ g.entries, "sl2")
    out = schottky_reduce(moved, group)
    return QuotientPoint(out.representative, q.word + out.word)


def translate_sample_set(s: LiftedSampleSet, g: GroupElement) -> LiftedSampleSet:
    """Right-translate every sample; marks follow the new reduction words."""
    g_su = disk.su11_from_sl2(g.entries)
    samples = []
    marks = np.empty(len(s))
    for i, q in enumerate(s.samples):
        p0 = disk.su11_from_sl2(q.representative.entries)
        p = disk.su11_mul(p0, g_su)
        if p == p0:
            # g acted trivially (e.g. the identity): keep the sample bitwise
            samples.append(q)
            marks[i] = s.marks[i]
            continue
        p, word, mark = _reduce_su11(p, s.group, float(s.marks[i]))
        rep = GroupElement(disk.sl2_from_su11(*p), "sl2")
        samples.append(QuotientPoint(rep, q.word + word))
        marks[i] = mark
    return LiftedSampleSet(
        group=s.group, seed=s.seed, n=s.n, samples=samples, marks=marks, kind=s.kind
    )


# -- test functions and statistics -------------------------------------------


def sample_features(s: LiftedSampleSet) -> np.ndarray:
    """Evaluate the versioned test dictionary; shape (8, len(s)).

    Every entry is a bounded function of the fundamental-domain
    representative and the mark: a Gaussian bump in the hyperbolic radius,
    the disk coordinates of the base point, the angle between the mark and
    the representative's forward boundary direction (the coordinate that
    sees right rotations, since those twist the frame against the mark),
    and trig of the transversal mark.
    """
    out = np.empty((len(FDICT_NAMES), len(s)))
    for i, q in enumerate(s.samples):
        m = q.representative.entries
        p = disk.su11_from_sl2(m)
        z = disk.base_point(p)
        r = abs(z)
        d_hyp = 2.0 * math.atanh(min(r, 1.0 - 1e-16))
        w = math.exp(-((d_hyp / 4.0) ** 2))
        mark = float(s.marks[i])
        delta = mark - disk.apply_boundary(p, 0.0)
        mixed = z * cmath.exp(1j * mark)
        # the |z|^2 damping keeps the directional pair flat near the
        # basepoint, where small right translations swing the direction
        out[0, i] = w
        out[1, i] = w * r * r * z.real
        out[2, i] = w * r * r * z.imag
        out[3, i] = w * math.cos(delta)
        out[4, i] = w * math.cos(2.0 * delta)
        out[5, i] = w * math.cos(mark)
        out[6, i] = w * math.sin(mark)
        out[7, i] = w * mixed.imag
    return out


def feature_deficits(s: LiftedSampleSet, g: GroupElement) -> list:
    """Per-feature translation shifts: (name, mean before, mean after, deficit).

    The deficit is the mean shift in units of the combined standard error
    of the two empirical means; exactly zero when the translated feature
    array is bitwise unchanged (g = identity).
    """
    if len(s) == 0:
        raise UsageError("empty sample set")
    before = sample_features(s)
    after = sample_features(translate_sample_set(s, g))
    n = before.shape[1]
    rows = []
    for name, b, a in zip(FDICT_NAMES, before, after):
        if np.array_equal(b, a):
            rows.append((name, float(b.mean()), float(a.mean()), 0.0))
            continue
        gap = float(b.mean() - a.mean())
        se = math.sqrt((float(b.var(ddof=1)) + float(a.var(ddof=1))) / n)
        d = math.inf if se == 0.0 else abs(gap) / se
        rows.append((name, float(b.mean()), float(a.mean()), d))
    return rows


def invariance_deficit(s: LiftedSampleSet, g: GroupElement) -> float:
    """Worst test-function shift under right translation, in standard errors."""
    return max(d for _, _, _, d in feature_deficits(s, g))


def holonomy_step(group: SchottkyGroup, theta: float) -> float:
    """One transversal holonomy move: push angles inside a circle's arc."""
    z = cmath.exp(1j * theta)
    i = group.circle_index(z)
    if i is None:
        return float(theta) % (2.0 * math.pi)
    return disk.apply_boundary(group.elements[i], theta)


def transverse_stationarity_residual(s: LiftedSampleSet, bins: int) -> float:
    """TV distance between the mark law and its holonomy image, in noise units."""
    if bins < 8:
        raise UsageError("need at least 8 bins")
    n = len(s)
    if n == 0:
        raise UsageError("empty sample set")
    images = np.array([holonomy_step(s.group, m) for m in s.marks])
    edges = np.linspace(0.0, 2.0 * math.pi, bins + 1)
    p, _ = np.histogram(s.marks % (2.0 * math.pi), bins=edges)
    q, _ = np.histogram(images, bins=edges)
    p = p / n
    q = q / n
    tv = 0.5 * float(np.abs(p - q).sum())
    if tv == 0.0:
        return 0.0
    pbar = 0.5 * (p + q)
    floor = 0.5 * float(
        np.sum(math.sqrt(2.0 / math.pi) * np.sqrt(2.0 * pbar * (1.0 - pbar) / n))
    )
    return tv / floor
