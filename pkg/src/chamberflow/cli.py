"""Command-line entry point.

Every subcommand writes machine-readable output (CSV, JSON or JSONL)
preceded by a manifest of comment lines: the resolved command line, the
seed, a sha256 over the canonical input parameters, and an anchor tag for
the experiment family.  Identical invocations produce byte-identical
output.  Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys

import click
import numpy as np

from . import acceptance, diffusion, heatkernel, lamination
from .decomp import GroupElement, cartan, iwasawa
from .diffusion import DiffusionConfig
from .errors import NumericalError, UsageError
from .rootdata import ChamberVector, build_root_system

GROUPS = click.Choice(["sl2", "sl3"])


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _read_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def _apply_config(ctx, values: dict) -> dict:
    """Merge a key=value file under explicit flags (flags win)."""
    path = values.pop("config", None)
    if not path:
        return values
    cfg = _read_config(path)
    params = {}
    for p in ctx.command.params:
        params[p.name] = p
        for opt in getattr(p, "opts", ()):
            params[opt.lstrip("-").replace("-", "_")] = p
    out = dict(values)
    for name, raw in cfg.items():
        p = params.get(name)
        if p is None or p.name not in out:
            raise UsageError(f"unknown config key {name!r}")
        if ctx.get_parameter_source(p.name).name == "DEFAULT":
            out[p.name] = p.type.convert(raw, p, ctx)
    return out


def _manifest(ctx, seed, anchor: str, inputs: dict, extra=()) -> list:
    blob = json.dumps(inputs, sort_keys=True, default=str, separators=(",", ":"))
    digest = hashlib.sha256(blob.encode()).hexdigest()
    args = " ".join(f"--{k.replace('_', '-')} {inputs[k]}" for k in sorted(inputs))
    lines = [
        f"# command: {ctx.command_path} {args}".rstrip(),
        f"# seed: {seed}",
        f"# inputs-sha256: {digest}",
        f"# anchor: {anchor}",
    ]
    lines.extend(extra)
    return lines


def _emit(out, lines) -> None:
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _parse_gspec(spec: str) -> GroupElement:
    kind, sep, raw = spec.partition(":")
    if not sep:
        raise UsageError(f"bad test element {spec!r}; expected kind:value")
    try:
        t = float(raw)
    except ValueError as exc:
        raise UsageError(f"bad test element parameter {raw!r}") from exc
    if kind == "a":
        m = np.diag([math.exp(0.5 * t), math.exp(-0.5 * t)])
    elif kind == "n":
        m = np.array([[1.0, t], [0.0, 1.0]])
    elif kind == "k":
        c, s = math.cos(t), math.sin(t)
        m = np.array([[c, -s], [s, c]])
    else:
        raise UsageError(f"unknown test element kind {kind!r}; expected a, n or k")
    return GroupElement(m, "sl2")


_config_opt = click.option(
    "--config", type=click.Path(exists=True, dir_okay=False), default=None,
    help="key=value file merged under explicit flags",
)


@click.group()
def cli():
    """Chamber-valued decomposition, decay and invariance experiments."""


@cli.command()
@click.option("--group", type=GROUPS, required=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_config_opt
@click.pass_context
def roots(ctx, **kw):
    """Print the restricted root data and the Weyl vector as JSON."""
    kw = _apply_config(ctx, kw)
    rs = build_root_system(kw["group"])
    lines = _manifest(ctx, 0, "root-data", {"group": kw["group"]})
    lines.append(json.dumps(rs.to_json_dict(), indent=2, sort_keys=True))
    _emit(kw["out"], lines)


@cli.command()
@click.option("--group", type=GROUPS, required=True)
@click.option("--matrix", required=True, help="comma-separated row-major entries")
@click.option("--iwasawa", "mode", flag_value="iwasawa")
@click.option("--cartan", "mode", flag_value="cartan")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_config_opt
@click.pass_context
def decomp(ctx, **kw):
    """Factor one matrix and print the factors as JSON."""
    kw = _apply_config(ctx, kw)
    if kw["mode"] is None:
        raise UsageError("choose one of --iwasawa or --cartan")
    n = 2 if kw["group"] == "sl2" else 3
    try:
        entries = [float(v) for v in kw["matrix"].split(",")]
    except ValueError as exc:
        raise UsageError("matrix entries must be numbers") from exc
    if len(entries) != n * n:
        raise UsageError(f"expected {n * n} entries for {kw['group']}")
    g = GroupElement(np.array(entries).reshape(n, n), kw["group"])
    if kw["mode"] == "iwasawa":
        trip = iwasawa(g)
        body = {
            "n": trip.n_part.entries.tolist(),
            "a": trip.a_part.entries.tolist(),
            "k": trip.k_part.entries.tolist(),
        }
        rec = trip.reconstruct()
    else:
        trip = cartan(g)
        body = {
            "k1": trip.k1.entries.tolist(),
            "a": trip.a_part.entries.tolist(),
            "k2": trip.k2.entries.tolist(),
        }
        rec = trip.reconstruct()
    body["reconstruction_error"] = float(np.max(np.abs(rec.entries - g.entries)))
    lines = _manifest(
        ctx, 0, "matrix-factorization",
        {"group": kw["group"], "matrix": kw["matrix"], "mode": kw["mode"]},
    )
    lines.append(json.dumps(body, indent=2))
    _emit(kw["out"], lines)


@cli.command()
@click.option("--group", type=GROUPS, required=True)
@click.option("--t", type=float, required=True)
@click.option("--step", type=float, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_config_opt
@click.pass_context
def kernel(ctx, **kw):
    """Dump the normalized radial density grid as CSV."""
    kw = _apply_config(ctx, kw)
    rs = build_root_system(kw["group"])
    grid = heatkernel.flight_density_grid(rs, kw["t"], step=kw["step"])
    lines = _manifest(
        ctx, 0, "radial-density-grid",
        {"group": kw["group"], "t": kw["t"], "step": grid.step},
    )
    coords = [grid.axis_centers(i) for i in range(rs.rank)]
    lines.append(",".join(f"y{i + 1}" for i in range(rs.rank)) + ",density")
    for idx in np.ndindex(grid.values.shape):
        row = [_fmt(coords[ax][i]) for ax, i in enumerate(idx)]
        row.append(_fmt(grid.values[idx]))
        lines.append(",".join(row))
    _emit(kw["out"], lines)


@cli.command()
@click.option("--group", type=GROUPS, default="sl3")
@click.option("--t", "times", default="4,8,16,32,64", help="comma-separated times")
@click.option("--h0", default="rho", help="'rho' or comma-separated diagonal coords")
@click.option("--radius-exponent", type=float, default=0.2)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_config_opt
@click.pass_context
def decay(ctx, **kw):
    """Decay curve: shifted-density L1 gap, wall-slab mass, concentration."""
    kw = _apply_config(ctx, kw)
    rs = build_root_system(kw["group"])
    try:
        times = [float(v) for v in kw["times"].split(",")]
    except ValueError as exc:
        raise UsageError("--t must be a comma-separated list of times") from exc
    if kw["h0"] == "rho":
        h0 = rs.rho
    else:
        try:
            coords = [float(v) for v in kw["h0"].split(",")]
        except ValueError as exc:
            raise UsageError("--h0 must be 'rho' or a comma-separated vector") from exc
        if len(coords) != rs.n:
            raise UsageError(f"expected {rs.n} coordinates for {kw['group']}")
        h0 = ChamberVector(coords)
    lines = _manifest(
        ctx, 0, "radial-decay-curve",
        {"group": kw["group"], "t": kw["times"], "h0": kw["h0"],
         "radius_exponent": kw["radius_exponent"]},
    )
    lines.append("t,shift_l1,slab_mass,concentration_frac")
    for t in times:
        grid = heatkernel.flight_density_grid(rs, t)
        lines.append(",".join([
            _fmt(t),
            _fmt(heatkernel.shift_l1_distance(grid, h0)),
            _fmt(heatkernel.slab_mass(grid, h0, 0)),
            _fmt(heatkernel.concentration_fraction(grid, kw["radius_exponent"])),
        ]))
    _emit(kw["out"], lines)


@cli.command()
@click.option("--group", type=GROUPS, required=True)
@click.option("--t", type=float, default=50.0)
@click.option("--paths", type=int, default=2000)
@click.option("--seed", type=int, default=0)
@click.option("--eps", type=float, default=0.02)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_config_opt
@click.pass_context
def simulate(ctx, **kw):
    """Per-path radial coordinates of the diffusion at a fixed horizon."""
    kw = _apply_config(ctx, kw)
    diffusion.apply_thread_env()
    cfg = DiffusionConfig(
        group_id=kw["group"], step_length=kw["eps"], seed=kw["seed"],
        paths=kw["paths"], horizon=kw["t"],
    )
    samples = diffusion.simulate_many(cfg)
    radials = diffusion.radial_components(samples)
    lines = _manifest(
        ctx, kw["seed"], "radial-drift-samples",
        {"group": kw["group"], "t": kw["t"], "paths": kw["paths"],
         "seed": kw["seed"], "eps": kw["eps"]},
    )
    lines.append("path,elapsed," + ",".join(f"r{i + 1}" for i in range(radials.shape[1])))
    for i in range(len(samples)):
        row = [str(int(samples.path_indices[i])), _fmt(samples.elapsed[i])]
        row.extend(_fmt(v) for v in radials[i])
        lines.append(",".join(row))
    _emit(kw["out"], lines)


@cli.command()
@click.option("--t", type=float, default=20.0)
@click.option("--paths", type=int, default=10_000)
@click.option("--bins", type=int, default=36)
@click.option("--seed", type=int, default=0)
@click.option("--eps", type=float, default=0.02)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_config_opt
@click.pass_context
def exitdirs(ctx, **kw):
    """Histogram of boundary exit directions of sl2 paths."""
    kw = _apply_config(ctx, kw)
    if kw["bins"] < 1:
        raise UsageError("need at least one bin")
    diffusion.apply_thread_env()
    cfg = DiffusionConfig(
        group_id="sl2", step_length=kw["eps"], seed=kw["seed"],
        paths=kw["paths"], horizon=kw["t"],
    )
    samples = diffusion.simulate_many(cfg)
    angles = []
    for g in samples.endpoints:
        b = diffusion.exit_direction(g)
        if b is not None:
            angles.append(b.angle)
    counts, edges = np.histogram(angles, bins=kw["bins"], range=(0.0, math.pi))
    lines = _manifest(
        ctx, kw["seed"], "boundary-exit-histogram",
        {"t": kw["t"], "paths": kw["paths"], "bins": kw["bins"],
         "seed": kw["seed"], "eps": kw["eps"]},
        extra=[f"# regular-samples: {len(angles)}"],
    )
    lines.append("bin,lo,hi,count")
    for i in range(kw["bins"]):
        lines.append(
            ",".join([str(i), _fmt(edges[i]), _fmt(edges[i + 1]), str(int(counts[i]))])
        )
    _emit(kw["out"], lines)


@cli.command()
@click.option("--n", type=int, default=64)
@click.option("--count", type=int, default=10_000)
@click.option("--seed", type=int, default=0)
@click.option("--preset", default="schottky-a")
@click.option("--eps", type=float, default=0.02)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_config_opt
@click.pass_context
def lift(ctx, **kw):
    """Lifted sample stream on the Schottky quotient as JSONL."""
    kw = _apply_config(ctx, kw)
    diffusion.apply_thread_env()
    group = lamination.schottky_preset(kw["preset"])
    cfg = DiffusionConfig(group_id="sl2", step_length=kw["eps"], seed=kw["seed"])
    sset = lamination.build_lift(cfg, group, kw["n"], kw["count"])
    lines = _manifest(
        ctx, kw["seed"], "lifted-sample-stream",
        {"n": kw["n"], "count": kw["count"], "seed": kw["seed"],
         "preset": kw["preset"], "eps": kw["eps"]},
    )
    for q, mark in zip(sset.samples, sset.marks):
        lines.append(json.dumps({
            "representative": q.representative.entries.tolist(),
            "word": list(q.word),
            "mark": float(mark),
        }))
    _emit(kw["out"], lines)


@cli.command()
@click.option("--in", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--g", "gspecs", multiple=True, required=True,
              help="test element, e.g. a:0.25, n:0.25 or k:0.785")
@click.option("--preset", default="schottky-a")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_config_opt
@click.pass_context
def invariance(ctx, **kw):
    """Per-feature invariance deficits of a stored lifted sample stream."""
    kw = _apply_config(ctx, kw)
    group = lamination.schottky_preset(kw["preset"])
    samples = []
    marks = []
    with open(kw["input_path"]) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rec = json.loads(line)
                rep = GroupElement(np.array(rec["representative"]), "sl2")
                samples.append(lamination.QuotientPoint(rep, tuple(rec["word"])))
                marks.append(float(rec["mark"]))
            except (ValueError, KeyError) as exc:
                raise UsageError(f"malformed sample line: {exc}") from exc
    if not samples:
        raise UsageError("no samples found in the input stream")
    sset = lamination.LiftedSampleSet(
        group=group, seed=0, n=0, samples=samples, marks=np.array(marks)
    )
    lines = _manifest(
        ctx, 0, "invariance-deficits",
        {"in": kw["input_path"], "g": ",".join(kw["gspecs"]), "preset": kw["preset"]},
    )
    lines.append("g,feature,mean_before,mean_after,deficit")
    for spec in kw["gspecs"]:
        g = _parse_gspec(spec)
        rows = lamination.feature_deficits(sset, g)
        for name, mb, ma, d in rows:
            lines.append(",".join([spec, name, _fmt(mb), _fmt(ma), _fmt(d)]))
        lines.append(",".join([spec, "max", "", "", _fmt(max(r[3] for r in rows))]))
    _emit(kw["out"], lines)


@cli.command(name="all")
@click.option("--seed", type=int, default=acceptance.DEFAULT_SEED)
@click.option("--only", default=None, help="comma-separated criterion indices")
@_config_opt
@click.pass_context
def run_all(ctx, **kw):
    """Run the acceptance suite and print one pass/fail line per criterion."""
    kw = _apply_config(ctx, kw)
    indices = None
    if kw["only"]:
        try:
            indices = [int(v) for v in kw["only"].split(",")]
        except ValueError as exc:
            raise UsageError("--only must be a comma-separated index list") from exc
    diffusion.apply_thread_env()
    for line in _manifest(ctx, kw["seed"], "acceptance-suite",
                          {"seed": kw["seed"], "only": kw["only"] or "all"}):
        click.echo(line)
    results = acceptance.run(indices, kw["seed"])
    for r in results:
        click.echo(r.line())
    if not all(r.passed for r in results):
        ctx.exit(2)


def _failure_site(exc) -> str:
    tb = exc.__traceback__
    while tb is not None and tb.tb_next is not None:
        tb = tb.tb_next
    if tb is None:
        return ""
    frame = tb.tb_frame
    return f" [in {frame.f_globals.get('__name__', '?')}.{frame.f_code.co_name}]"


def main(argv=None) -> None:
    try:
        # With standalone_mode=False click converts ctx.exit(code) into a
        # plain return value rather than raising, so propagate it here.
        rv = cli.main(args=argv, prog_name="chamberflow", standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.Abort:
        sys.exit(1)
    except UsageError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except NumericalError as exc:
        click.echo(f"numerical failure: {exc}{_failure_site(exc)}", err=True)
        sys.exit(2)
    sys.exit(rv if isinstance(rv, int) else 0)


if __name__ == "__main__":
    main()
