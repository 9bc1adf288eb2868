"""The invariant suite run by ``wignerflow check``.

Each check returns a CheckResult with the measured value and the tolerance
it was held to. Checks that do not apply to a family (closed-form energies
of a polynomial, parity of Morse states) are left out rather than passed.
"""
from __future__ import annotations

import math
import tempfile
import time
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .eigensolver import closed_form_energy, node_count, solve_bound_states
from .flow import DEFAULT_CUTOFF, continuity_residual, flow_field
from .io import OutputDir, RunManifest, redump
from .potentials import (
    DEFAULT_DEPTH,
    PotentialModel,
    eval_potential,
    leading_term,
    potential_derivative,
    truncate,
)
from .render import RenderStyle, load_panel, render_panel
from .topology import (
    LoopThroughStagnationError,
    SIGNIFICANCE,
    stagnation_points,
    winding_number,
    zero_contours,
)
from .tracking import evolve_and_track, match_sets
from .wigner import (
    TwoStateSpec,
    analytic_harmonic_oracle,
    covering_phase_grid,
    default_phase_grid,
    eigenstate_field,
    state_densities,
    superposition_field,
)

ENERGY_TOLERANCE = 1e-4
GRAM_TOLERANCE = 1e-8
PARITY_TOLERANCE = 1e-8
ORACLE_TOLERANCE = 1e-4
SYMMETRY_TOLERANCE = 1e-10
NORM_TOLERANCE = 1e-6
CURVATURE_TOLERANCE = 1e-8
DERIVATIVE_TOLERANCE = 1e-6
RESIDUAL_TOLERANCE = 1e-6
DIAGONAL_DEGREES = 5.0
EXPECTED_PSI1_POINTS = {"eckart": 9, "rosen-morse": 9, "morse": 7, "harmonic": 1}
TRACK_FRAMES = 24


@dataclass(frozen=True)
class CheckResult:
    module: str
    name: str
    passed: bool
    value: float | None = None
    tolerance: float | None = None
    detail: str = ""

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        val = "" if self.value is None else f" value={self.value:.3g}"
        tol = "" if self.tolerance is None else f" tol={self.tolerance:.3g}"
        extra = f" ({self.detail})" if self.detail else ""
        return f"{mark} [{self.module}] {self.name}{val}{tol}{extra}"

    def to_dict(self) -> dict:
        return {
            "module": self.module,
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "tolerance": self.tolerance,
            "detail": self.detail,
        }


def _below(module, name, value, tol, detail="") -> CheckResult:
    value = float(value)
    return CheckResult(module, name, bool(value < tol), value, tol, detail)


class _Context:
    """Lazily built objects shared by the checks of one potential."""

    def __init__(self, model: PotentialModel, cutoff: int):
        self.model = model
        self.cutoff = cutoff

    @cached_property
    def basis(self):
        return solve_bound_states(self.model, count=4)

    @cached_property
    def grid(self):
        return default_phase_grid(self.model)

    @cached_property
    def wide(self):
        return covering_phase_grid(self.basis)

    @cached_property
    def psi1_flow(self):
        return flow_field(eigenstate_field(self.basis, 1, self.grid), self.model, self.cutoff)

    @cached_property
    def psi1_points(self):
        return stagnation_points(self.psi1_flow)

    @cached_property
    def pair(self):
        return TwoStateSpec(self.basis, 0, 1, math.pi / 4)

    @cached_property
    def pair_flow(self):
        spec = self.pair.at(0.3 * self.pair.period)
        return flow_field(superposition_field(spec, self.grid), self.model, self.cutoff)

    @cached_property
    def pair_points(self):
        return stagnation_points(self.pair_flow)


def _family_models(model: PotentialModel) -> list[PotentialModel]:
    if model.family in DEFAULT_DEPTH:
        return [PotentialModel(model.family, d) for d in (4.0, 16.0, 64.0)]
    return [model]


def check_potential(ctx: _Context) -> list[CheckResult]:
    mod = "potential-models"
    out = []
    h = 1e-4
    worst = max(abs((eval_potential(m, h) - 2 * eval_potential(m, 0.0) + eval_potential(m, -h)) / h**2 - 1.0) for m in _family_models(ctx.model))
    out.append(_below(mod, "curvature V''(0) = 1", worst, CURVATURE_TOLERANCE))

    # each derivative against a five-point difference of the one below it
    x = np.linspace(-2.0, 2.0, 81)
    if ctx.model.family == "eckart":
        x = x[np.abs(x) < 0.9 * ctx.model.pole]
    step = 1e-3
    worst = 0.0
    for k in range(1, 6):
        f = lambda s: potential_derivative(ctx.model, x + s, k - 1) if k > 1 else eval_potential(ctx.model, x + s)
        fd = (-f(2 * step) + 8 * f(step) - 8 * f(-step) + f(-2 * step)) / (12 * step)
        exact = potential_derivative(ctx.model, x, k)
        scale = max(np.max(np.abs(exact)), 1e-300)
        worst = max(worst, float(np.max(np.abs(fd - exact)) / scale))
    out.append(_below(mod, "derivatives match finite differences, k <= 5", worst, DERIVATIVE_TOLERANCE))

    if ctx.model.family in ("eckart", "rosen-morse", "morse"):
        x = np.linspace(0.1, 1.5, 15)
        gap = max(
            float(np.max(np.abs(potential_derivative(ctx.model, -x, k) - (-1) ** k * potential_derivative(ctx.model, x, k))))
            for k in range(1, 6)
        )
        if ctx.model.family == "morse":
            out.append(CheckResult(mod, "Morse derivatives lack parity", gap > 1e-3, gap, 1e-3))
        else:
            out.append(_below(mod, "derivative parity follows k", gap, 1e-10))

    if ctx.model.family != "harmonic":
        nu, _ = leading_term(ctx.model)
        if nu in (3, 4):
            trunc = truncate(ctx.model)
            xs = np.array([1e-3, 1e-1])
            diff = np.abs(eval_potential(ctx.model, xs) - eval_potential(trunc, xs))
            slope = float(np.diff(np.log(diff))[0] / np.diff(np.log(xs))[0])
            out.append(CheckResult(mod, f"truncation error slope >= {nu + 0.9:g}", slope >= nu + 0.9, slope, nu + 0.9))
    return out


def check_eigensolver(ctx: _Context) -> list[CheckResult]:
    mod = "eigensolver"
    b = ctx.basis
    out = []
    if ctx.model.family != "polynomial":
        err = max(abs(b.energies[n] - closed_form_energy(ctx.model, n)) / closed_form_energy(ctx.model, n) for n in range(4))
        out.append(_below(mod, "energies match closed forms, n <= 3", err, ENERGY_TOLERANCE))
    gram = float(np.max(np.abs(b.gram() - np.eye(len(b)))))
    out.append(_below(mod, "orthonormality", gram, GRAM_TOLERANCE))
    if ctx.model.family in ("harmonic", "eckart", "rosen-morse"):
        x = np.linspace(0.0, 0.8 * min(b.grid.x_max, -b.grid.x_min), 401)
        gap = max(float(np.max(np.abs(b.function(n)(-x) - (-1) ** n * b.function(n)(x)))) for n in range(4))
        out.append(_below(mod, "parity psi_n(-x) = (-1)^n psi_n(x)", gap, PARITY_TOLERANCE))
    nodes = [node_count(b.states[n]) for n in range(4)]
    out.append(CheckResult(mod, "node count of psi_n is n", nodes == list(range(4)), detail=f"nodes {nodes}"))
    return out


def check_wigner(ctx: _Context) -> list[CheckResult]:
    mod = "wigner-engine"
    out = []
    b = ctx.basis
    if ctx.model.family == "harmonic":
        err = max(
            float(np.max(np.abs(eigenstate_field(b, n, ctx.grid).values - analytic_harmonic_oracle(n, ctx.grid).values)))
            for n in range(4)
        )
        out.append(_below(mod, "harmonic oracle, n <= 3", err, ORACLE_TOLERANCE))

    n_p = ctx.grid.n_p
    gap = 0.0
    for n in range(4):
        w = eigenstate_field(b, n, ctx.grid).values
        # p_j and -p_j sit at columns j and n_p - j
        gap = max(gap, float(np.max(np.abs(w[:, 1:] - w[:, :0:-1]))))
    out.append(_below(mod, "eigenstate symmetry W(x, p) = W(x, -p)", gap, SYMMETRY_TOLERANCE))

    g = ctx.wide
    worst = [0.0, 0.0, 0.0]
    specs = [TwoStateSpec(b, 0, n, 0.0) for n in (1,)] + [TwoStateSpec(b, 0, n, math.pi / 2) for n in (1, 2, 3)]
    specs += [TwoStateSpec(b, 0, 1, math.pi / 4, 0.3), TwoStateSpec(b, 1, 3, math.pi / 3, 1.7)]
    for spec in specs:
        w = superposition_field(spec, g)
        rho_x, rho_p = state_densities(spec, g.x, g.p)
        worst[0] = max(worst[0], abs(w.norm() - 1.0))
        worst[1] = max(worst[1], float(np.max(np.abs(w.x_marginal() - rho_x))))
        worst[2] = max(worst[2], float(np.max(np.abs(w.p_marginal() - rho_p))))
    out.append(_below(mod, "normalization", worst[0], NORM_TOLERANCE, "covering grid"))
    out.append(_below(mod, "x marginal = |psi(x)|^2", worst[1], NORM_TOLERANCE, "covering grid"))
    out.append(_below(mod, "p marginal = |phi(p)|^2", worst[2], NORM_TOLERANCE, "covering grid"))

    if ctx.model.family in DEFAULT_DEPTH:
        grid = default_phase_grid(PotentialModel.harmonic(), n=256)
        dists = []
        for depth in (16.0, 64.0, 256.0):
            m = PotentialModel(ctx.model.family, depth)
            bb = solve_bound_states(m, count=2)
            if m.family == "eckart" and m.pole <= 5.0:
                raise ValueError("convergence check needs Eckart poles outside the harmonic window")
            dists.append(float(np.max(np.abs(eigenstate_field(bb, 1, grid).values - analytic_harmonic_oracle(1, grid).values))))
        mono = dists[0] > dists[1] > dists[2]
        out.append(CheckResult(mod, "convergence to harmonic as D grows", mono, dists[-1], None, "distances " + ", ".join(f"{d:.2e}" for d in dists)))
    return out


def check_flow(ctx: _Context) -> list[CheckResult]:
    mod = "flow-topology"
    out = []
    fam = ctx.model.family
    if fam == "harmonic":
        w = superposition_field(ctx.pair.at(0.7), ctx.grid)
        f = flow_field(w, ctx.model, DEFAULT_CUTOFF)
        x, p = ctx.grid.mesh()
        err = max(float(np.max(np.abs(f.jx - p * w.values))), float(np.max(np.abs(f.jp + x * w.values))))
        out.append(_below(mod, "harmonic flow is W (p, -x)", err, 1e-14))
        res = continuity_residual(ctx.pair.at(0.7), ctx.grid, DEFAULT_CUTOFF)
        out.append(_below(mod, "continuity residual", res.max_norm, RESIDUAL_TOLERANCE))
    else:
        spec = ctx.pair.at(0.7)
        hi = continuity_residual(spec, ctx.grid, DEFAULT_CUTOFF).max_norm
        lo = continuity_residual(spec, ctx.grid, 2).max_norm
        out.append(CheckResult(mod, "continuity residual shrinks from L=2 to L=10", hi < lo, hi, lo))

    charges = [pt.charge for s in (ctx.psi1_points, ctx.pair_points) for pt in s.points]
    bad = [c for c in charges if c not in (-1, 0, 1)]
    out.append(CheckResult(mod, "charges in {-1, 0, +1}", not bad, detail=f"{len(charges)} points"))

    count = len(ctx.psi1_points)
    expected = EXPECTED_PSI1_POINTS.get(fam)
    if expected is not None:
        ok = count == expected and (fam != "harmonic" or len(ctx.psi1_points.lines) == 1)
        out.append(CheckResult(mod, f"psi_1 stagnation count = {expected}", ok, count, None, f"{len(ctx.psi1_points.lines)} stagnation lines"))

    if fam in ("eckart", "rosen-morse"):
        worst = 0.0
        for L in (0, 2, ctx.cutoff):
            f = flow_field(eigenstate_field(ctx.basis, 1, ctx.grid), ctx.model, L)
            pts = stagnation_points(f).positions()
            worst = max(worst, float(np.min(np.hypot(pts[:, 0], pts[:, 1]))) if len(pts) else math.inf)
        out.append(_below(mod, "origin point pinned for all L", worst / ctx.grid.dx, 2.0, "in grid cells"))

        tol = 2 * ctx.grid.dx
        diag = [pt for pt in ctx.psi1_points.points if abs(pt.x) > tol and abs(pt.p) > tol]
        devs = [abs(math.degrees(math.atan2(pt.p, pt.x)) % 90.0 - 45.0) for pt in diag]
        ok = len(diag) == 4 and max(devs) < DIAGONAL_DEGREES
        out.append(CheckResult(mod, "diagonal points near odd multiples of 45 deg", ok, max(devs) if devs else None, DIAGONAL_DEGREES))

    mismatches, compared = 0, 0
    for flow, pts in ((ctx.psi1_flow, ctx.psi1_points), (ctx.pair_flow, ctx.pair_points)):
        for pt in pts.points:
            try:
                a = winding_number(flow, pt.position, pt.radius)
                b = winding_number(flow, pt.position, 0.5 * pt.radius)
            except LoopThroughStagnationError:
                continue
            compared += 1
            mismatches += a != b
    out.append(CheckResult(mod, "winding number independent of loop radius", mismatches == 0 and compared > 0, detail=f"{compared} points"))

    flow = ctx.pair_flow
    g = ctx.grid
    gx, gp = np.gradient(flow.wigner.values, g.dx, g.dp)
    worst = 0.0
    for ln in zero_contours(flow.jx, g, "Jx", significance=SIGNIFICANCE):
        pts = ln.points[:: max(1, len(ln.points) // 40)]
        w = flow.wigner.evaluate(pts[:, 0], pts[:, 1])[0]
        i = np.clip(np.rint((pts[:, 0] - g.x[0]) / g.dx).astype(int), 0, g.shape[0] - 1)
        j = np.clip(np.rint((pts[:, 1] - g.p[0]) / g.dp).astype(int), 0, g.shape[1] - 1)
        # distance in cells to p = 0 and, to first order, to the nearest W zero
        to_w = np.abs(w) / np.maximum(np.hypot(gx[i, j], gp[i, j]), 1e-300) / g.dx
        worst = max(worst, float(np.max(np.minimum(np.abs(pts[:, 1]) / g.dp, to_w))))
    out.append(_below(mod, "J_x zeros lie on p = 0 or W = 0", worst, 1.0, "distance in grid cells"))
    return out


def check_tracking(ctx: _Context) -> list[CheckResult]:
    mod = "dynamics-tracker"
    out = []
    spec = ctx.pair
    period = spec.period
    coarse = evolve_and_track(spec, np.linspace(0.0, period, TRACK_FRAMES + 1), ctx.cutoff, grid=ctx.grid)
    fine = evolve_and_track(spec, np.linspace(0.0, period, 2 * TRACK_FRAMES + 1), ctx.cutoff, grid=ctx.grid)

    first, last = coarse.frames[0].points, coarse.frames[-1].points
    out.append(CheckResult(mod, "frames at t and t + T agree", match_sets(first, last, 2 * ctx.grid.dx), detail=f"{len(first)} points"))
    balanced = all(row["balanced"] for row in coarse.charge_ledger())
    out.append(CheckResult(mod, "charge ledger balances", balanced, detail=f"sums {sorted(set(coarse.charge_sums()))}"))
    merges = [e for e in coarse.events() if e["type"] in ("merged-with", "split-from")]
    worst = 0
    for e in merges:
        charges = [e["omega"]] + [coarse.tracks[i].charge for i in e["partners"]]
        worst = max(worst, abs(sum(c or 0 for c in charges)))
    out.append(CheckResult(mod, "merges carry |sum omega| <= 1", worst <= 1, worst, 1))
    kinds = lambda rec: Counter(e["type"] for e in rec.events())
    same = kinds(coarse) == kinds(fine)
    out.append(CheckResult(mod, "halving the frame step keeps event types", same, detail=f"{dict(kinds(coarse))} vs {dict(kinds(fine))}"))
    return out


def check_io(ctx: _Context) -> list[CheckResult]:
    mod = "cli-io"
    out = []
    flow = ctx.psi1_flow
    with tempfile.TemporaryDirectory() as tmp:
        for fmt in ("csv", "json"):
            root = Path(tmp) / fmt
            od = OutputDir(root, fmt)
            head = {"grid": ctx.grid.to_dict(), "potential": ctx.model.to_dict()}
            od.matrix("w", flow.wigner.values, {**head, "kind": "W"})
            od.matrix("jp", flow.jp, {**head, "kind": "Jp"})
            od.table("points", ["x", "p", "omega"], [[pt.x, pt.p, pt.charge] for pt in ctx.psi1_points.points], {"kind": "points"})
            od.report("stagnation", {"kind": "stagnation", "points": [pt.to_dict() for pt in ctx.psi1_points.points]})
            od.finish(RunManifest("check", {}))
            same = all(redump(root / rel) == (root / rel).read_text() for rel in od.outputs)
            out.append(CheckResult(mod, f"dump round trip is byte-identical ({fmt})", same))
        panel = load_panel(Path(tmp) / "csv")
        style = RenderStyle(streamline_seeds=3)
        out.append(CheckResult(mod, "render is deterministic", render_panel(panel, style) == render_panel(load_panel(Path(tmp) / "csv"), style)))
    return out


SUITES = {
    "potential-models": check_potential,
    "eigensolver": check_eigensolver,
    "wigner-engine": check_wigner,
    "flow-topology": check_flow,
    "dynamics-tracker": check_tracking,
    "cli-io": check_io,
}


def run_checks(model: PotentialModel, cutoff: int = DEFAULT_CUTOFF, *, modules=None, report=None) -> list[CheckResult]:
    """Run the suites for one potential; ``report`` is called with each result as it lands."""
    ctx = _Context(model, cutoff)
    results = []
    for name, suite in SUITES.items():
        if modules and name not in modules:
            continue
        start = time.perf_counter()
        try:
            found = suite(ctx)
        except Exception as exc:  # a crashing suite is a failed invariant, not a crashed run
            found = [CheckResult(name, "suite raised", False, detail=f"{type(exc).__name__}: {exc}")]
        elapsed = time.perf_counter() - start
        for res in found:
            res = CheckResult(res.module, f"{model.label()}: {res.name}", res.passed, res.value, res.tolerance, res.detail)
            results.append(res)
            if report:
                report(res)
        if report:
            report(CheckResult(name, f"{model.label()}: suite time {elapsed:.1f} s", True))
    return results
