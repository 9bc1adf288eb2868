"""Command-line entry point: ``wignerflow <command> [flags]``.

Exit status is 0 on success, 1 when a computed result fails its validation,
and 2 for usage errors (unknown flags, inconsistent specs, unreadable input).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .checks import run_checks
from .eigensolver import (
    GridTooSmallError,
    bound_state_count,
    closed_form_energy,
    node_count,
    solve_bound_states,
)
from .flow import DEFAULT_CUTOFF, MAX_CUTOFF, continuity_residual, flow_field, vortex_displacement_approx
from .io import MANIFEST_NAME, OutputDir, RunManifest, compare_outputs
from .potentials import DEFAULT_DEPTH, FAMILIES, PotentialModel, UnitsConfig
from .render import MixedGridError, RenderStyle, load_panel, render_panel, render_sheet, render_tracks
from .topology import SIGNIFICANCE, flow_zero_lines, stagnation_points
from .tracking import (
    FRAMES_PER_PERIOD,
    LINK_CELLS,
    MAX_REFINEMENT,
    compute_frame,
    evolve_and_track,
    match_sets,
    origin_vortex_track,
    rabi_spec,
)
from .wigner import (
    TRIM_LEVEL,
    PhaseSpaceGrid,
    TwoStateSpec,
    default_phase_grid,
    eigenstate_field,
    superposition_field,
)

ENERGY_TOLERANCE = 1e-4
GRAM_TOLERANCE = 1e-8
RABI_FRAMES_PER_PERIOD = 25
COMMANDS = ("eigs", "wigner", "flow", "stag", "track", "rabi", "check", "render", "replay")


class UsageError(Exception):
    """A flag value or flag combination that cannot describe a run."""

    def __init__(self, flag: str, message: str):
        super().__init__(f"{flag}: {message}")
        self.flag = flag


def preset_names() -> list[str]:
    root = resources.files("wignerflow") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> dict:
    path = resources.files("wignerflow") / "presets" / f"{name}.json"
    if not path.is_file():
        raise UsageError("--preset", f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return json.loads(path.read_text())


def _common(parser: argparse.ArgumentParser, command: str):
    g = parser.add_argument_group("system")
    g.add_argument("--potential", choices=FAMILIES, default=None, help="potential family (default harmonic)")
    g.add_argument("--depth", type=float, default=None, help="well depth D for eckart, rosen-morse and morse")
    g.add_argument("--coefficients", default=None, help="polynomial terms as power:alpha pairs, e.g. 4:0.0017")
    if command in ("check", "eigs"):
        return
    g.add_argument("--state", default=None, help="eigenstate n or superposition pair m,n")
    g.add_argument("--theta", type=float, default=math.pi / 4, help="mixing angle of a pair (radians)")
    g.add_argument("--time", type=float, default=0.0, help="time t")
    g.add_argument("--phase", type=float, default=None, help="time as a fraction of the pair's revolution period")
    g.add_argument("--grid", type=int, default=512, help="phase-space nodes per axis")
    g.add_argument("--domain", type=float, default=None, help="half-width X of the phase-space window")
    g.add_argument("--cutoff", type=int, default=DEFAULT_CUTOFF, help="flow truncation L")


def _outputs(parser: argparse.ArgumentParser):
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--format", choices=("csv", "json"), default="csv", help="matrix dump format")
    parser.add_argument("--preset", default=None, help="named parameter set; explicit flags override it")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="wignerflow", description="Wigner phase-space flow of weakly anharmonic potentials.")
    parser.add_argument("--version", action="version", version=f"wignerflow {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    subs = {}

    p = sub.add_parser("eigs", help="solve bound states and validate energies")
    _common(p, "eigs")
    p.add_argument("--count", type=int, default=4, help="number of states")
    _outputs(p)
    subs["eigs"] = p

    for name, text in (
        ("wigner", "dump a Wigner field"),
        ("flow", "dump the truncated flow J_[L]"),
        ("stag", "report stagnation points and zero lines"),
    ):
        p = sub.add_parser(name, help=text)
        _common(p, name)
        _outputs(p)
        p.add_argument("--render", action="store_true", help="also write renders/panel.svg")
        subs[name] = p

    p = sub.add_parser("track", help="track stagnation points through two-state dynamics")
    _common(p, "track")
    p.add_argument("--frames", type=int, default=FRAMES_PER_PERIOD, help="frames per revolution period")
    p.add_argument("--periods", type=float, default=1.0, help="number of revolution periods")
    _outputs(p)
    p.add_argument("--render", action="store_true", help="also write renders/tracks.svg")
    subs["track"] = p

    p = sub.add_parser("rabi", help="track stagnation points through a Rabi cycle")
    _common(p, "rabi")
    p.add_argument("--rabi-ratio", type=float, default=0.125, help="Rabi frequency over the harmonic frequency")
    p.add_argument("--frames", type=int, default=RABI_FRAMES_PER_PERIOD, help="frames per revolution period of the pair")
    _outputs(p)
    p.add_argument("--render", action="store_true", help="also write renders/tracks.svg")
    subs["rabi"] = p

    p = sub.add_parser("check", help="run the invariant suite")
    _common(p, "check")
    p.add_argument("--cutoff", type=int, default=DEFAULT_CUTOFF, help="flow truncation L")
    p.add_argument("--module", action="append", default=None, help="restrict to one module's invariants (repeatable)")
    _outputs(p)
    subs["check"] = p

    p = sub.add_parser("render", help="SVG from dump directories or files")
    p.add_argument("inputs", nargs="+", help="run directories or dump files")
    p.add_argument("--columns", type=int, default=None, help="contact-sheet columns (default: all in one row)")
    p.add_argument("--labels", default=None, help="comma-separated panel labels")
    p.add_argument("--size", type=int, default=480, help="panel size in pixels")
    p.add_argument("--glyphs", type=int, default=21, help="flow glyphs per axis")
    p.add_argument("--seeds", type=int, default=6, help="streamline seeds per axis")
    p.add_argument("--no-overlay", action="store_true", help="omit the |J|-scaled arrows")
    _outputs(p)
    subs["render"] = p

    p = sub.add_parser("replay", help="re-run a manifest and compare its outputs")
    p.add_argument("manifest", help="manifest.json or the directory holding it")
    p.add_argument("--out", default=None, help="output directory (default: <run>/replay)")
    p.add_argument("--tolerance", type=float, default=1e-12, help="allowed relative difference")
    subs["replay"] = p
    return parser, subs


# argument interpretation


def _model(args) -> PotentialModel:
    family = args.potential or "harmonic"
    if args.depth is not None and family not in DEFAULT_DEPTH:
        raise UsageError("--depth", f"{family} takes no depth")
    if args.depth is not None and not args.depth > 0:
        raise UsageError("--depth", "must be positive")
    if args.coefficients is not None and family != "polynomial":
        raise UsageError("--coefficients", "only the polynomial family takes coefficients")
    if family == "polynomial":
        if not args.coefficients:
            raise UsageError("--coefficients", "the polynomial family needs power:alpha terms")
        terms = {}
        try:
            for item in args.coefficients.split(","):
                nu, alpha = item.split(":")
                terms[int(nu)] = float(alpha)
            return PotentialModel.polynomial(terms)
        except ValueError as exc:
            raise UsageError("--coefficients", str(exc)) from exc
    return PotentialModel.from_name(family, args.depth)


def _state(args, pair_required: bool = False) -> tuple[int, ...]:
    raw = args.state if args.state is not None else ("0,1" if pair_required else "1")
    try:
        idx = tuple(int(s) for s in raw.split(","))
    except ValueError as exc:
        raise UsageError("--state", f"expected n or m,n, got {raw!r}") from exc
    if len(idx) not in (1, 2) or any(i < 0 for i in idx):
        raise UsageError("--state", f"expected n or m,n with non-negative indices, got {raw!r}")
    if len(idx) == 2 and not idx[0] < idx[1]:
        raise UsageError("--state", "a pair needs m < n")
    if pair_required and len(idx) != 2:
        raise UsageError("--state", "this command needs a superposition pair m,n")
    return idx


def _basis(model, needed: int, flag="--state"):
    count = max(needed, 2)
    if count > bound_state_count(model):
        raise UsageError(flag, f"{model.label()} binds only {bound_state_count(model)} states")
    try:
        return solve_bound_states(model, count=count)
    except GridTooSmallError as exc:
        raise UsageError(flag, str(exc)) from exc


def _grid(args, model) -> PhaseSpaceGrid:
    n = args.grid
    if n < 64 or n & (n - 1):
        raise UsageError("--grid", f"must be a power of two >= 64, got {n}")
    if args.domain is None:
        return default_phase_grid(model, n=n)
    X = args.domain
    if not X > 0:
        raise UsageError("--domain", "must be positive")
    if model.family == "eckart" and X >= model.pole:
        raise UsageError("--domain", f"the Eckart poles sit at +-{model.pole:.4g}; choose X below that")
    lo, hi = (1.0 - X, 1.0 + X) if model.family == "morse" else (-X, X)
    return PhaseSpaceGrid.square(lo, hi, X, n)


def _cutoff(args) -> int:
    if not 0 <= args.cutoff <= MAX_CUTOFF:
        raise UsageError("--cutoff", f"must lie in [0, {MAX_CUTOFF}]")
    return args.cutoff


def _spec(args, basis, idx) -> TwoStateSpec | None:
    if len(idx) == 1:
        if args.phase is not None:
            raise UsageError("--phase", "an eigenstate has no revolution period")
        return None
    spec = TwoStateSpec(basis, idx[0], idx[1], args.theta)
    t = args.time if args.phase is None else args.phase * spec.period
    return spec.at(t)


def _field(args, basis, idx, grid):
    spec = _spec(args, basis, idx)
    if spec is None:
        w = eigenstate_field(basis, idx[0], grid)
        return w, None, f"{basis.potential.label()} psi_{idx[0]}"
    w = superposition_field(spec, grid)
    label = f"{basis.potential.label()} Psi_{spec.m},{spec.n} theta={spec.theta:.4g} t={spec.t:.4g}"
    return w, spec, label


def _header(kind, grid, model, label, extra=None) -> dict:
    return {"kind": kind, "grid": grid.to_dict(), "potential": model.to_dict(), "label": label, **(extra or {})}


def _constants() -> dict:
    return {
        "significance": SIGNIFICANCE,
        "link_cells": LINK_CELLS,
        "max_refinement": MAX_REFINEMENT,
        "trim_level": TRIM_LEVEL,
    }


def _resolved(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "out", "preset", "command")}


def _manifest(args, model=None, grid=None, state=None, cutoff=None) -> RunManifest:
    return RunManifest(
        command=args.command,
        args=_resolved(args),
        potential=None if model is None else model.to_dict(),
        units={"hbar": UnitsConfig().hbar, "mass": UnitsConfig().mass},
        grid=None if grid is None else grid.to_dict(),
        state=state,
        cutoff=cutoff,
        constants=_constants(),
    )


# commands


def cmd_eigs(args) -> int:
    model = _model(args)
    if args.count < 1:
        raise UsageError("--count", "must be positive")
    basis = _basis(model, args.count, "--count")
    out = OutputDir(args.out, args.format)
    rows, ok = [], True
    for n, e in enumerate(basis.energies):
        exact = closed_form_energy(model, n) if model.family != "polynomial" else None
        rel = None if exact is None else abs(e - exact) / abs(exact)
        nodes = node_count(basis.states[n])
        good = (rel is None or rel < ENERGY_TOLERANCE) and nodes == n
        ok &= good
        rows.append({"n": n, "energy": float(e), "closed_form": exact, "relative_error": rel, "nodes": nodes, "passed": good})
        shown = "" if rel is None else f"  closed form {exact:.10f}  rel err {rel:.2e}"
        print(f"E_{n} = {e:.10f}{shown}  nodes {nodes}  {'ok' if good else 'FAIL'}")
    gram = float(np.max(np.abs(basis.gram() - np.eye(len(basis)))))
    ok &= gram < GRAM_TOLERANCE
    print(f"orthonormality error {gram:.2e}")
    out.report("eigs", {"kind": "eigs", "potential": model.to_dict(), "grid": basis.grid.to_dict(), "states": rows, "gram_error": gram, "passed": ok})
    header = {"kind": "states", "spatial_grid": basis.grid.to_dict(), "potential": model.to_dict(), "energies": [float(e) for e in basis.energies]}
    out.matrix("states", basis.states.T, header)
    manifest = _manifest(args, model, None, {"count": args.count})
    manifest.grid = basis.grid.to_dict()
    manifest.status = 0 if ok else 1
    out.finish(manifest)
    return manifest.status


def _field_run(args, with_flow: bool, with_points: bool) -> int:
    model = _model(args)
    idx = _state(args)
    basis = _basis(model, max(idx) + 1)
    grid = _grid(args, model)
    cutoff = _cutoff(args)
    w, spec, label = _field(args, basis, idx, grid)
    out = OutputDir(args.out, args.format)
    out.matrix("w", w.values, _header("W", grid, model, label, {"time": w.time, "source": w.source}))
    summary = {"kind": args.command, "label": label, "norm": w.norm(), "time": w.time}
    if with_flow:
        flow = flow_field(w, model, cutoff)
        head = {"time": w.time, "source": w.source, "cutoff": cutoff}
        out.matrix("jx", flow.jx, _header("Jx", grid, model, label, head))
        out.matrix("jp", flow.jp, _header("Jp", grid, model, label, head))
        summary["max_flow"] = float(np.max(flow.magnitude()))
        summary["cutoff"] = cutoff
        if spec is not None:
            summary["continuity_residual"] = continuity_residual(spec, grid, cutoff).max_norm
    if with_points:
        pts = stagnation_points(flow)
        lines = flow_zero_lines(flow)
        rows = []
        for comp in ("W", "Jx", "Jp"):
            for k, ln in enumerate(lines[comp]):
                rows += [[comp, k, ln.closed, float(x), float(p)] for x, p in ln.points]
        out.table("contours", ["component", "line", "closed", "x", "p"], rows, {"kind": "contours", "grid": grid.to_dict(), "label": label})
        report = {
            "kind": "stagnation",
            "label": label,
            "grid": grid.to_dict(),
            "cutoff": cutoff,
            "count": len(pts),
            "total_charge": pts.total_charge(),
            "points": [pt.to_dict() for pt in pts.points],
            "lines": [{"closed": ln.closed, "points": ln.to_records()} for ln in pts.lines],
        }
        out.report("stagnation", report)
        print(f"{label}: {len(pts)} stagnation points, total charge {pts.total_charge():+d}, {len(pts.lines)} stagnation lines")
        for pt in pts.points:
            omega = "?" if pt.charge is None else f"{pt.charge:+d}"
            print(f"  ({pt.x:+.6f}, {pt.p:+.6f})  omega {omega}  {pt.classification}")
    else:
        out.report(args.command, summary)
        print(f"{label}: norm {w.norm():.8f}" + (f", max |J| {summary['max_flow']:.4g}" if with_flow else ""))
    if args.render:
        out.finish(_manifest(args, model, grid, {"indices": list(idx)}, cutoff))
        out.render("panel", render_panel(load_panel(args.out)))
    state = {"indices": list(idx)} if spec is None else spec.describe()
    out.finish(_manifest(args, model, grid, state, cutoff))
    return 0


def cmd_wigner(args) -> int:
    return _field_run(args, False, False)


def cmd_flow(args) -> int:
    return _field_run(args, True, False)


def cmd_stag(args) -> int:
    return _field_run(args, True, True)


def _track_outputs(out, record, grid, label):
    rows = []
    for tr in record.tracks:
        for k, (f, i) in enumerate(zip(tr.frames, tr.indices)):
            pt = record.frames[f].points.points[i]
            rows.append([f, record.frames[f].time, tr.ident, pt.x, pt.p, pt.charge])
    out.table("track_points", ["frame", "time", "track", "x", "p", "omega"], rows, {"kind": "track_points", "grid": grid.to_dict(), "label": label})


def _track_validation(record) -> dict:
    ledger_ok = all(row["balanced"] for row in record.charge_ledger())
    worst = 0
    for e in record.events():
        if e["type"] in ("merged-with", "split-from"):
            total = (e["omega"] or 0) + sum(record.tracks[i].charge or 0 for i in e["partners"])
            worst = max(worst, abs(total))
    pairs_ok = all(
        (e["omega"] or 0) + sum(record.tracks[i].charge or 0 for i in e["partners"]) == 0
        for e in record.events()
        if e["type"] in ("born", "died") and e["partners"]
    )
    return {"charge_ledger_balanced": ledger_ok, "max_merge_charge": worst, "pairs_neutral": pairs_ok, "unlinked_intervals": len(record.unlinked)}


def cmd_track(args) -> int:
    model = _model(args)
    idx = _state(args, pair_required=True)
    basis = _basis(model, idx[1] + 1)
    grid = _grid(args, model)
    cutoff = _cutoff(args)
    if args.frames < 2:
        raise UsageError("--frames", "need at least 2 frames per period")
    if not args.periods > 0:
        raise UsageError("--periods", "must be positive")
    spec = _spec(args, basis, idx)
    t0, period = spec.t, spec.period
    count = int(round(args.frames * args.periods))
    times = t0 + np.linspace(0.0, args.periods * period, count + 1)
    record = evolve_and_track(spec, times, cutoff, grid=grid)
    label = f"{model.label()} Psi_{spec.m},{spec.n} theta={spec.theta:.4g}"
    out = OutputDir(args.out, args.format)
    report = {"kind": "track", "label": label, "period": period, "cutoff": cutoff, **record.to_dict()}
    if (spec.n - spec.m) % 2 == 0:
        xs = origin_vortex_track(spec, times, cutoff, grid=grid)
        approx = vortex_displacement_approx(model, spec, times)
        report["origin_vortex"] = {"times": times, "x": xs, "approximation": approx}
    checks = _track_validation(record)
    report["validation"] = checks
    out.report("track", report)
    _track_outputs(out, record, grid, label)
    if args.render:
        out.render("tracks", render_tracks(out.root / "fields" / "track_points.csv"))
    ok = checks["charge_ledger_balanced"] and checks["max_merge_charge"] <= 1 and checks["pairs_neutral"]
    print(f"{label}: {len(record.frames)} frames, {len(record.tracks)} tracks, {len(record.events())} events, charge sums {sorted(set(record.charge_sums()))}")
    print(f"  ledger balanced {checks['charge_ledger_balanced']}, max merge |sum omega| {checks['max_merge_charge']}, pairs neutral {checks['pairs_neutral']}")
    manifest = _manifest(args, model, grid, spec.describe(), cutoff)
    manifest.status = 0 if ok else 1
    out.finish(manifest)
    return manifest.status


def cmd_rabi(args) -> int:
    model = _model(args)
    idx = _state(args, pair_required=True)
    basis = _basis(model, idx[1] + 1)
    grid = _grid(args, model)
    cutoff = _cutoff(args)
    if not args.rabi_ratio > 0:
        raise UsageError("--rabi-ratio", "must be positive")
    if args.frames < 2:
        raise UsageError("--frames", "need at least 2 frames per period")
    spec = rabi_spec(basis, args.rabi_ratio, *idx)
    rabi_period = 4.0 * math.pi / args.rabi_ratio
    count = int(math.ceil(args.frames * rabi_period / spec.period))
    times = np.linspace(0.0, rabi_period, count + 1)
    record = evolve_and_track(spec, times, cutoff, grid=grid)
    # theta = 3 pi / 4 is the fixed pi/4 pair with the relative sign flipped, i.e. half a period later
    t_star = math.pi / (2.0 * args.rabi_ratio)
    fixed = TwoStateSpec(basis, idx[0], idx[1], math.pi / 4)
    tol = LINK_CELLS * min(grid.dx, grid.dp)
    eig = stagnation_points(flow_field(eigenstate_field(basis, idx[1], grid), model, cutoff))
    start_ok = match_sets(record.frames[0].points, eig, tol)
    quarter = compute_frame(spec, t_star, grid, cutoff)
    reference = compute_frame(fixed, t_star + 0.5 * fixed.period, grid, cutoff)
    quarter_ok = match_sets(quarter.points, reference.points, tol)
    label = f"{model.label()} Rabi ratio {args.rabi_ratio:.4g}"
    checks = _track_validation(record)
    checks.update({"start_matches_eigenstate": start_ok, "quarter_matches_fixed_angle": quarter_ok, "quarter_time": t_star})
    out = OutputDir(args.out, args.format)
    out.report("rabi", {"kind": "rabi", "label": label, "rabi_period": rabi_period, "cutoff": cutoff, "validation": checks, **record.to_dict()})
    _track_outputs(out, record, grid, label)
    if args.render:
        out.render("tracks", render_tracks(out.root / "fields" / "track_points.csv"))
    ok = checks["charge_ledger_balanced"] and checks["max_merge_charge"] <= 1 and checks["pairs_neutral"] and start_ok and quarter_ok
    print(f"{label}: {len(record.frames)} frames, {len(record.events())} events; t=0 matches psi_{idx[1]}: {start_ok}; t={t_star:.4g} matches fixed angle: {quarter_ok}")
    manifest = _manifest(args, model, grid, spec.describe(), cutoff)
    manifest.status = 0 if ok else 1
    out.finish(manifest)
    return manifest.status


def cmd_check(args) -> int:
    models = [_model(args)] if args.potential else [PotentialModel.from_name(f) for f in ("harmonic", "eckart", "rosen-morse", "morse")]
    if args.depth is not None and not args.potential:
        raise UsageError("--depth", "give --potential with --depth")
    cutoff = _cutoff(args)
    unknown = set(args.module or ()) - {"potential-models", "eigensolver", "wigner-engine", "flow-topology", "dynamics-tracker", "cli-io"}
    if unknown:
        raise UsageError("--module", f"unknown module(s) {sorted(unknown)}")
    results = []
    for model in models:
        results += run_checks(model, cutoff, modules=args.module, report=lambda r: print(r.line(), flush=True))
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} invariants hold")
    out = OutputDir(args.out, args.format)
    out.report("check", {"kind": "check", "results": [r.to_dict() for r in results], "passed": not failed})
    manifest = _manifest(args, models[0] if len(models) == 1 else None, None, None, cutoff)
    manifest.status = 1 if failed else 0
    out.finish(manifest)
    return manifest.status


def cmd_render(args) -> int:
    style = RenderStyle(size=args.size, glyphs=args.glyphs, overlay=not args.no_overlay, streamline_seeds=args.seeds)
    labels = args.labels.split(",") if args.labels else None
    if labels and len(labels) != len(args.inputs):
        raise UsageError("--labels", f"{len(labels)} labels for {len(args.inputs)} inputs")
    svgs = []
    for path in args.inputs:
        if not Path(path).exists():
            raise UsageError("inputs", f"{path} does not exist")
        track_file = Path(path) / "fields" / "track_points.csv" if Path(path).is_dir() else Path(path)
        if track_file.name == "track_points.csv" and track_file.exists():
            svgs.append(render_tracks(track_file, size=args.size))
            continue
        try:
            svgs.append(render_panel(load_panel(path), style))
        except MixedGridError as exc:
            raise UsageError("inputs", str(exc)) from exc
        except ValueError as exc:
            raise UsageError("inputs", str(exc)) from exc
    out = OutputDir(args.out, "csv")
    if len(svgs) == 1:
        out.render("panel", svgs[0])
    else:
        out.render("sheet", render_sheet(svgs, args.columns or len(svgs), labels))
    manifest = _manifest(args)
    manifest.args["inputs"] = [str(Path(p).resolve()) for p in args.inputs]
    out.finish(manifest)
    print(f"wrote {', '.join(out.outputs)} under {args.out}")
    return 0


def cmd_replay(args) -> int:
    src = Path(args.manifest)
    root = src if src.is_dir() else src.parent
    try:
        manifest = RunManifest.read(src)
    except (OSError, ValueError) as exc:
        raise UsageError("manifest", f"cannot read {src}: {exc}") from exc
    if manifest.command == "replay":
        raise UsageError("manifest", "a replay manifest cannot be replayed")
    target = Path(args.out) if args.out else root / "replay"
    ns = argparse.Namespace(**manifest.args, command=manifest.command, out=str(target), preset=None)
    status = HANDLERS[manifest.command](ns)
    bad = compare_outputs(root, target, manifest.outputs, args.tolerance)
    if bad:
        print(f"replay differs in {len(bad)} file(s): {', '.join(bad)}")
        return 1
    print(f"replay of {manifest.command} reproduces all {len(manifest.outputs)} outputs (status {status})")
    return 0 if status == manifest.status else 1


HANDLERS = {
    "eigs": cmd_eigs,
    "wigner": cmd_wigner,
    "flow": cmd_flow,
    "stag": cmd_stag,
    "track": cmd_track,
    "rabi": cmd_rabi,
    "check": cmd_check,
    "render": cmd_render,
    "replay": cmd_replay,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        # a preset supplies defaults for its command; flags on the line still win
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("command", nargs="?")
        pre.add_argument("--preset", default=None)
        known, _ = pre.parse_known_args(argv)
        if known.preset and known.command in subs:
            preset = load_preset(known.preset)
            if preset["command"] != known.command:
                raise UsageError("--preset", f"{known.preset} is a {preset['command']} preset, not {known.command}")
            dests = {a.dest for a in subs[known.command]._actions}
            stray = set(preset["args"]) - dests
            if stray:
                raise UsageError("--preset", f"{known.preset} sets unknown options {sorted(stray)}")
            subs[known.command].set_defaults(**preset["args"])
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_usage(sys.stderr)
            print("wignerflow: error: a command is required", file=sys.stderr)
            return 2
        return HANDLERS[args.command](args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"wignerflow: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
