"""Desk-scale acceptance suite.

Each criterion is a standalone callable returning a result record; the CLI
and the test suite share them.  Thresholds live here, next to the checks.
Statistical criteria use the fixed default seed so a rerun reproduces the
same verdict bit for bit.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import diffusion, disk, heatkernel, lamination
from .decomp import GroupElement, cartan, iwasawa, radial_component
from .diffusion import BoundaryPoint, DiffusionConfig
from .errors import UsageError
from .rootdata import ChamberVector, build_root_system

DEFAULT_SEED = 7


@dataclass
class CriterionResult:
    index: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"criterion {self.index} {self.name}: {verdict} ({self.seconds:.1f}s) {self.detail}"


def _random_unimodular(rng, n: int) -> np.ndarray:
    m = rng.normal(size=(n, n))
    if np.linalg.det(m) < 0:
        m[[0, 1]] = m[[1, 0]]
    d = np.linalg.det(m)
    return m / d ** (1.0 / n)


def _warm_engine() -> None:
    """Force the compiled kernels to load before a timed run starts."""
    cfg = DiffusionConfig(group_id="sl2", seed=0, horizon=0.01)
    diffusion.simulate_path(cfg, 0)
    cfg3 = DiffusionConfig(group_id="sl3", seed=0, horizon=0.01)
    diffusion.simulate_path(cfg3, 0)


def criterion_1(seed: int = DEFAULT_SEED) -> CriterionResult:
    """Iwasawa/Cartan round trips and chamber position on random elements."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst_rt = 0.0
    worst_wall = 0.0
    for group_id, n in (("sl2", 2), ("sl3", 3)):
        rs = build_root_system(group_id)
        for _ in range(1000):
            g = GroupElement(_random_unimodular(rng, n), group_id)
            ni = iwasawa(g).reconstruct()
            nc = cartan(g).reconstruct()
            worst_rt = max(
                worst_rt,
                float(np.max(np.abs(ni.entries - g.entries))),
                float(np.max(np.abs(nc.entries - g.entries))),
            )
            worst_wall = max(worst_wall, -rs.chamber_distance(radial_component(g)))
    dt = time.perf_counter() - t0
    ok = worst_rt < 1e-9 and worst_wall < 1e-10 and dt < 2.0
    return CriterionResult(
        1,
        "decomposition-round-trip",
        ok,
        f"round-trip {worst_rt:.2e} (<1e-9), chamber violation {worst_wall:.2e} (<1e-10)",
        dt,
    )


def criterion_2(seed: int = DEFAULT_SEED) -> CriterionResult:
    """Weyl-vector pairing identity and idempotent chamber reduction."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst_pair = 0.0
    idempotent = True
    for group_id in ("sl2", "sl3"):
        rs = build_root_system(group_id)
        for a in rs.simple_roots:
            p = float(rs.weyl_vector.coords @ rs.coroot(a))
            worst_pair = max(worst_pair, abs(p - 1.0))
        for _ in range(1000):
            v = rng.normal(size=rs.n)
            h = ChamberVector(v - v.mean())
            once = rs.weyl_reduce(h)
            twice = rs.weyl_reduce(once)
            if not np.array_equal(once.coords, twice.coords):
                idempotent = False
    dt = time.perf_counter() - t0
    ok = worst_pair <= 1e-12 and idempotent
    return CriterionResult(
        2,
        "root-identities",
        ok,
        f"max |<rho,coroot>-1| = {worst_pair:.2e} (<=1e-12), reduce idempotent: {idempotent}",
        dt,
    )


def criterion_3(seed: int = DEFAULT_SEED) -> CriterionResult:
    """Radial decay of the shifted density and of the wall slab, sl3."""
    t0 = time.perf_counter()
    rs = build_root_system("sl3")
    h0 = rs.rho
    times = (4.0, 8.0, 16.0, 32.0, 64.0)
    shifts = []
    slabs = []
    for t in times:
        grid = heatkernel.flight_density_grid(rs, t)
        shifts.append(heatkernel.shift_l1_distance(grid, h0))
        slabs.append(heatkernel.slab_mass(grid, h0, 0))
    monotone = all(a >= b for a, b in zip(shifts, shifts[1:]))
    shift_ratio = shifts[-1] / shifts[0]
    slab_ratio = slabs[-1] / slabs[0]
    dt = time.perf_counter() - t0
    ok = monotone and shift_ratio <= 0.3 and slab_ratio <= 0.1 and dt < 60.0
    return CriterionResult(
        3,
        "radial-decay",
        ok,
        f"shift ratio {shift_ratio:.3f} (<=0.3), slab ratio {slab_ratio:.2e} (<=0.1), "
        f"monotone: {monotone}",
        dt,
    )


def criterion_4(seed: int = DEFAULT_SEED) -> CriterionResult:
    """Mass concentration around 2*rho*t and grid argmax position at t = 64."""
    t0 = time.perf_counter()
    details = []
    ok = True
    for group_id in ("sl2", "sl3"):
        rs = build_root_system(group_id)
        grid = heatkernel.flight_density_grid(rs, 64.0)
        frac = heatkernel.concentration_fraction(grid, 0.2)
        off = int(grid.argmax_cell_offset().max())
        ok = ok and frac >= 0.95 and off <= 2
        details.append(f"{group_id}: fraction {frac:.3f} (>=0.95), argmax offset {off} (<=2)")
    dt = time.perf_counter() - t0
    return CriterionResult(4, "concentration", ok, "; ".join(details), dt)


def criterion_5(seed: int = DEFAULT_SEED) -> CriterionResult:
    """Radial drift 2*rho at t = 50 and stability under halving the step."""
    t0 = time.perf_counter()
    details = []
    ok = True
    for group_id in ("sl2", "sl3"):
        rs = build_root_system(group_id)
        target = rs.two_rho.coords
        scale = float(np.linalg.norm(target))
        estimates = {}
        for eps in (0.02, 0.01):
            cfg = DiffusionConfig(
                group_id=group_id, step_length=eps, seed=seed, paths=2000, horizon=50.0
            )
            radials = diffusion.radial_components(diffusion.simulate_many(cfg))
            estimates[eps] = radials.mean(axis=0) / 50.0
        bias = float(np.max(np.abs(estimates[0.02] - target)))
        change = float(np.max(np.abs(estimates[0.02] - estimates[0.01])))
        ok = ok and bias <= 0.05 * scale and change < 0.01 * scale
        details.append(
            f"{group_id}: drift gap {bias:.4f} (<= {0.05 * scale:.4f}), "
            f"half-step change {change:.4f} (< {0.01 * scale:.4f})"
        )
    dt = time.perf_counter() - t0
    return CriterionResult(5, "radial-drift", ok, "; ".join(details), dt)


def criterion_6(seed: int = DEFAULT_SEED) -> CriterionResult:
    """Exit-direction uniformity on the rank-1 boundary circle."""
    _warm_engine()
    t0 = time.perf_counter()
    cfg = DiffusionConfig(group_id="sl2", seed=seed, paths=10_000, horizon=20.0)
    samples = diffusion.simulate_many(cfg)
    angles = []
    for g in samples.endpoints:
        b = diffusion.exit_direction(g)
        if b is not None:
            angles.append(b.angle)
    counts, _ = np.histogram(angles, bins=36, range=(0.0, math.pi))
    n = len(angles)
    p = 1.0 / 36.0
    sd = math.sqrt(n * p * (1.0 - p))
    dev = float(np.max(np.abs(counts - n * p))) / sd
    dt = time.perf_counter() - t0
    ok = dev < 5.0
    return CriterionResult(
        6,
        "exit-direction-uniformity",
        ok,
        f"max bin deviation {dev:.2f} multinomial sd (<5), {n} regular samples",
        dt,
    )


def _element_from_disk_point(z: complex) -> GroupElement:
    return GroupElement(disk.sl2_from_su11(*disk.translation_to(z)), "sl2")


def criterion_7(seed: int = DEFAULT_SEED) -> CriterionResult:
    """Boundary-kernel harmonicity and modular multiplicativity (rank 1)."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    boundary = [BoundaryPoint(2.0 * math.pi * j / 16.0) for j in range(16)]

    def h(x: GroupElement) -> float:
        return sum(diffusion.poisson_kernel(x, xi) for xi in boundary) / len(boundary)

    # geodesic circle of trace-form radius r around each test point
    r = 0.05
    rho_disk = math.tanh(r / (2.0 * math.sqrt(2.0)))
    worst_defect = 0.0
    for _ in range(100):
        z = (0.1 + 0.6 * rng.random()) * np.exp(2j * math.pi * rng.random())
        center = h(_element_from_disk_point(complex(z)))
        tr = disk.translation_to(complex(z))
        acc = 0.0
        for m in range(256):
            w = disk.apply_point(tr, rho_disk * np.exp(2j * math.pi * m / 256.0))
            acc += h(_element_from_disk_point(w))
        worst_defect = max(worst_defect, abs(acc / 256.0 - center) / center)

    def na(u: float, x: float) -> GroupElement:
        return GroupElement(
            np.array([[1.0, x], [0.0, 1.0]]) @ np.diag([math.exp(u), math.exp(-u)]),
            "sl2",
        )

    worst_mult = 0.0
    for _ in range(100):
        g1 = na(rng.uniform(-1, 1), rng.uniform(-1, 1))
        g2 = na(rng.uniform(-1, 1), rng.uniform(-1, 1))
        lhs = diffusion.modular_function(g1 @ g2)
        rhs = diffusion.modular_function(g1) * diffusion.modular_function(g2)
        worst_mult = max(worst_mult, abs(lhs - rhs) / rhs)
    worst_n = max(
        abs(diffusion.modular_function(na(0.0, rng.uniform(-2, 2))) - 1.0)
        for _ in range(20)
    )
    dt = time.perf_counter() - t0
    ok = worst_defect < 1e-3 and worst_mult <= 1e-10 and worst_n <= 1e-10
    return CriterionResult(
        7,
        "poisson-modular",
        ok,
        f"mean-value defect {worst_defect:.2e} (<1e-3), multiplicativity {worst_mult:.2e} "
        f"(<=1e-10), unipotent gap {worst_n:.2e} (<=1e-10)",
        dt,
    )


def _test_elements() -> dict:
    c, s = math.cos(math.pi / 4.0), math.sin(math.pi / 4.0)
    return {
        "a": GroupElement(np.diag([math.exp(0.125), math.exp(-0.125)]), "sl2"),
        "n": GroupElement(np.array([[1.0, 0.25], [0.0, 1.0]]), "sl2"),
        "k": GroupElement(np.array([[c, -s], [s, c]]), "sl2"),
    }


def criterion_8(seed: int = DEFAULT_SEED) -> CriterionResult:
    """Invariance profile of the lifted measure and of the Haar control."""
    _warm_engine()
    t0 = time.perf_counter()
    group = lamination.schottky_preset()
    cfg = DiffusionConfig(group_id="sl2", seed=seed)
    lift = lamination.build_lift(cfg, group, n=64, count=10_000)
    haar = lamination.build_haar_control(group, count=10_000, seed=seed)
    g = _test_elements()
    d = {k: lamination.invariance_deficit(lift, v) for k, v in g.items()}
    hd = {k: lamination.invariance_deficit(haar, v) for k, v in g.items()}
    dt = time.perf_counter() - t0
    ok = (
        d["a"] <= 3.0
        and d["n"] <= 3.0
        and d["k"] >= 10.0 * d["a"]
        and all(v <= 3.0 for v in hd.values())
        and dt < 120.0
    )
    return CriterionResult(
        8,
        "lift-invariance",
        ok,
        f"lift deficits a={d['a']:.2f} n={d['n']:.2f} (<=3), k={d['k']:.2f} "
        f"(>= {10.0 * d['a']:.2f}); haar a={hd['a']:.2f} n={hd['n']:.2f} k={hd['k']:.2f} (<=3)",
        dt,
    )


def _fingerprint(seed: int) -> bytes:
    cfg2 = DiffusionConfig(group_id="sl2", seed=seed, paths=64, horizon=5.0)
    s2 = diffusion.simulate_many(cfg2)
    cfg3 = DiffusionConfig(group_id="sl3", seed=seed, paths=16, horizon=2.0)
    s3 = diffusion.simulate_many(cfg3)
    group = lamination.schottky_preset()
    lift = lamination.build_lift(DiffusionConfig(group_id="sl2", seed=seed), group, 8, 64)
    parts = [s2.na_n.tobytes(), s2.na_h.tobytes(), s3.na_n.tobytes(), s3.na_h.tobytes()]
    for q in lift.samples:
        parts.append(q.representative.entries.tobytes())
        parts.append(bytes(q.word))
    parts.append(lift.marks.tobytes())
    return b"".join(parts)


def criterion_9(seed: int = DEFAULT_SEED) -> CriterionResult:
    """Byte-identical sample sets for 1, 2 and 8 workers at a fixed seed."""
    t0 = time.perf_counter()
    prints = []
    for workers in (1, 2, 8):
        diffusion.set_worker_count(workers)
        prints.append(_fingerprint(seed))
    diffusion.set_worker_count(1)
    ok = prints[0] == prints[1] == prints[2]
    dt = time.perf_counter() - t0
    return CriterionResult(
        9,
        "worker-reproducibility",
        ok,
        f"fingerprints identical across 1/2/8 workers: {ok} "
        f"({len(prints[0])} bytes compared)",
        dt,
    )


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
}


def run(indices=None, seed: int = DEFAULT_SEED) -> list:
    if indices is None:
        indices = sorted(CRITERIA)
    results = []
    for i in indices:
        if i not in CRITERIA:
            raise UsageError(f"no criterion {i}; valid indices are 1..9")
        results.append(CRITERIA[i](seed))
    return results


def format_table(results) -> str:
    return "\n".join(r.line() for r in results)
