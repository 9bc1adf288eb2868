"""Zero lines of the flow, stagnation points and their winding numbers.

Because J_x = p W / M, the J_x zero set is the p = 0 axis together with the
W = 0 lines. Stagnation points therefore come in two kinds: zeros of J_p on
the axis, and sign changes of J_p along W zero lines. Both are refined with
exact point evaluations of the flow and then charged by their winding number.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import maximum_filter
from scipy.optimize import brentq
from skimage import measure

from .flow import FlowField

NEWTON_ITERATIONS = 50
NEWTON_TOLERANCE = 1e-12
DEDUPE_DISTANCE = 1e-3
WINDING_TOLERANCE = 1e-10
# stagnation search ignores regions where |W| stays below this fraction of its peak
SIGNIFICANCE = 1e-3
# along-line |J_p| below this fraction of max |J| marks a line of stagnation
DEGENERACY = 1e-9


class LoopThroughStagnationError(ValueError):
    """The winding loop passes (nearly) through a zero of the flow."""


@dataclass(frozen=True)
class ZeroLine:
    component: str
    points: np.ndarray
    closed: bool

    def to_records(self) -> list[list[float]]:
        return [[float(x), float(p)] for x, p in self.points]


@dataclass(frozen=True)
class StagnationPoint:
    x: float
    p: float
    charge: int | None
    residual: float
    radius: float
    classification: str
    converged: bool = True

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.p])

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "p": self.p,
            "omega": self.charge,
            "residual": self.residual,
            "radius": self.radius,
            "class": self.classification,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, data: dict) -> StagnationPoint:
        return cls(
            float(data["x"]),
            float(data["p"]),
            None if data["omega"] is None else int(data["omega"]),
            float(data["residual"]),
            float(data["radius"]),
            data["class"],
            bool(data.get("converged", True)),
        )


@dataclass(frozen=True)
class StagnationSet:
    points: tuple[StagnationPoint, ...]
    lines: tuple[ZeroLine, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.points)

    def positions(self) -> np.ndarray:
        return np.array([pt.position for pt in self.points]).reshape(-1, 2)

    def charges(self) -> list[int | None]:
        return [pt.charge for pt in self.points]

    def total_charge(self) -> int:
        return int(sum(c for c in self.charges() if c is not None))


def _classify(charge: int | None, on_axis_crossing: bool) -> str:
    if on_axis_crossing:
        return "axis-degenerate"
    return {1: "vortex", -1: "saddle", 0: "zero-charge"}.get(charge, "axis-degenerate")


def zero_contours(values: np.ndarray, grid, component: str = "W", *, significance: float | None = None) -> list[ZeroLine]:
    """Marching-squares zero lines of a grid field in phase-space coordinates.

    With ``significance`` the lines are kept only where the field's local
    magnitude exceeds that fraction of its maximum, which drops sign noise in
    decayed tails.
    """
    values = np.asarray(values, dtype=float)
    mask = None
    if significance is not None:
        peak = np.max(np.abs(values))
        if peak == 0:
            return []
        mask = maximum_filter(np.abs(values), size=5) > significance * peak
    raw = measure.find_contours(values, 0.0, mask=mask)
    lines = []
    for c in raw:
        if len(c) < 2 or np.any(np.isnan(c)):
            c = c[~np.isnan(c).any(axis=1)]
            if len(c) < 2:
                continue
        pts = np.column_stack([grid.x[0] + c[:, 0] * grid.dx, grid.p[0] + c[:, 1] * grid.dp])
        closed = bool(np.allclose(c[0], c[-1]))
        lines.append(ZeroLine(component, pts, closed))
    return lines


def flow_zero_lines(flow: FlowField, *, significance: float = SIGNIFICANCE) -> dict[str, list[ZeroLine]]:
    """Zero lines of W, J_x and J_p; the J_x set is the p = 0 axis plus the W lines."""
    grid = flow.grid
    w_lines = zero_contours(flow.wigner.values, grid, "W", significance=significance)
    axis = ZeroLine("Jx", np.array([[grid.x[0], 0.0], [grid.x[-1], 0.0]]), False)
    jx_lines = [axis] + [ZeroLine("Jx", ln.points, ln.closed) for ln in w_lines]
    jp_lines = zero_contours(flow.jp, grid, "Jp", significance=significance)
    return {"W": w_lines, "Jx": jx_lines, "Jp": jp_lines}


def _as_callable(flow):
    if isinstance(flow, FlowField):
        return flow.evaluate
    return flow


def winding_number(
    flow,
    center,
    radius: float,
    samples: int = 64,
    *,
    tolerance: float = WINDING_TOLERANCE,
    max_samples: int = 4096,
) -> int:
    """Net turns of the flow direction along a counterclockwise circle.

    ``flow`` is a FlowField or any callable (x, p) -> (J_x, J_p). Arcs whose
    angle increment exceeds pi/2 are bisected until none does.
    """
    func = _as_callable(flow)

    def sample(phi):
        jx, jp = func(center[0] + radius * np.cos(phi), center[1] + radius * np.sin(phi))
        jx, jp = np.broadcast_to(jx, phi.shape), np.broadcast_to(jp, phi.shape)
        mags = np.hypot(jx, jp)
        if np.min(mags) <= 10.0 * tolerance:
            raise LoopThroughStagnationError(
                f"|J| = {np.min(mags):.2e} on the loop of radius {radius:g} around "
                f"({center[0]:.6g}, {center[1]:.6g}); choose a different radius"
            )
        return np.arctan2(jp, jx)

    phi = 2.0 * math.pi * np.arange(int(samples) + 1) / int(samples)
    ang = sample(phi)
    ang[-1] = ang[0]
    while True:
        steps = np.angle(np.exp(1j * np.diff(ang)))
        coarse = np.flatnonzero(np.abs(steps) > 0.5 * math.pi)
        if len(coarse) == 0 or len(phi) >= max_samples:
            break
        mid = 0.5 * (phi[coarse] + phi[coarse + 1])
        new = sample(mid)
        phi = np.insert(phi, coarse + 1, mid)
        ang = np.insert(ang, coarse + 1, new)
    return int(round(np.sum(steps) / (2.0 * math.pi)))


def _newton(residual, start, cell, *, lock_axis=False, iterations=NEWTON_ITERATIONS, tol=NEWTON_TOLERANCE):
    """Damped Newton with finite-difference Jacobian; step clipped to one cell."""
    r = np.array(start, dtype=float)
    f = residual(r)
    h = 1e-6 * cell
    for _ in range(iterations):
        norm = np.linalg.norm(f)
        if norm < tol:
            return r, norm, True
        jac = np.empty((2, 2))
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            jac[:, k] = (residual(r + e) - residual(r - e)) / (2 * h)
        try:
            step = -np.linalg.solve(jac, f)
        except np.linalg.LinAlgError:
            step = -np.linalg.lstsq(jac, f, rcond=None)[0]
        if lock_axis:
            step[1] = 0.0
        length = np.linalg.norm(step)
        if length > cell:
            step *= cell / length
        lam = 1.0
        for _ in range(30):
            trial = r + lam * step
            ft = residual(trial)
            if np.linalg.norm(ft) < norm:
                break
            lam *= 0.5
        else:
            return r, norm, norm < 1e3 * tol
        r, f = trial, ft
        if lam * length < 1e-15 * max(1.0, np.linalg.norm(r)):
            break
    norm = np.linalg.norm(f)
    return r, norm, norm < 1e3 * tol


def _axis_points(flow: FlowField, significance: float) -> list[float]:
    """Roots of J_p(x, 0), bracketed on the grid row p = 0 and refined exactly."""
    grid = flow.grid
    j0 = int(np.argmin(np.abs(grid.p)))
    if abs(grid.p[j0]) > 1e-12 * grid.dp:
        raise ValueError("the momentum grid has no p = 0 row")
    row = flow.jp[:, j0]
    # same 5 x 5 envelope as the zero-line mask, so both detectors see one region
    env = maximum_filter(np.abs(flow.wigner.values), size=5)[:, j0]
    ok = env > significance * np.max(np.abs(flow.wigner.values))
    small = np.abs(row) <= 1e-14 * np.max(np.abs(row))
    live = np.flatnonzero(~small & ok)
    # exact zeros (x = 0 for even potentials) are roots; divide them out so a
    # second root in the same cell still shows up as a sign change
    exact = grid.x[np.flatnonzero(small & ok)]
    exact = exact[[abs(flow.evaluate([z], [0.0])[1][0]) == 0 for z in exact]] if len(exact) else exact

    def f(x):
        x = min(exact, key=lambda z: abs(x - z)) + 1e-9 * grid.dx if any(abs(x - z) < 1e-12 for z in exact) else x
        return float(flow.evaluate([x], [0.0])[1][0]) / np.prod(x - exact)

    sign = np.sign(row) * np.sign(np.prod(grid.x[:, None] - exact[None, :], axis=1))
    roots = [float(z) for z in exact]
    for a, b in zip(live[:-1], live[1:]):
        if sign[a] == sign[b] or b - a > 3:
            continue
        lo, hi = grid.x[a], grid.x[b]
        flo, fhi = f(lo), f(hi)
        if flo * fhi > 0:
            continue
        roots.append(lo if flo == 0 else hi if fhi == 0 else brentq(f, lo, hi, xtol=1e-14, rtol=1e-14))
    return roots


def _line_crossings(flow: FlowField, line: ZeroLine):
    """Seeds where J_p changes sign along a W zero line, plus its degeneracy flag."""
    pts = line.points
    _, jp = flow.evaluate(pts[:, 0], pts[:, 1], quantum_only=True)
    scale = float(np.max(flow.magnitude()))
    if np.max(np.abs(jp)) < DEGENERACY * scale:
        return [], True
    s = np.sign(jp)
    seeds = []
    for i in np.flatnonzero(s[:-1] * s[1:] <= 0):
        if s[i] == 0 and i > 0 and s[i - 1] == 0:
            continue
        a, b = abs(jp[i]), abs(jp[i + 1])
        t = a / (a + b) if a + b > 0 else 0.5
        seeds.append(pts[i] + t * (pts[i + 1] - pts[i]))
    return seeds, False


def stagnation_points(
    flow: FlowField,
    *,
    significance: float = SIGNIFICANCE,
    dedupe: float = DEDUPE_DISTANCE,
    window=None,
) -> StagnationSet:
    """Refined, deduplicated and charged stagnation points of a flow.

    W zero lines along which J_p vanishes identically (the harmonic case) are
    returned as lines of stagnation rather than as point lists.
    """
    grid = flow.grid
    cell = min(grid.dx, grid.dp)
    w_lines = zero_contours(flow.wigner.values, grid, "W", significance=significance)
    degenerate, found = [], []

    def off_axis(r):
        w, _, jp = flow.components([r[0]], [r[1]])
        return np.array([w[0], jp[0]])

    for line in w_lines:
        seeds, flat = _line_crossings(flow, line)
        if flat:
            degenerate.append(ZeroLine("stagnation", line.points, line.closed))
            continue
        for seed in seeds:
            r, res, ok = _newton(off_axis, seed, cell)
            found.append((r, ok, False))
    for x0 in _axis_points(flow, significance):
        found.append((np.array([x0, 0.0]), True, True))

    found = [f for f in found if not _on_lines(f[0], degenerate, 2 * cell)]
    if window is not None:
        (x_lo, x_hi), (p_lo, p_hi) = window
        found = [f for f in found if x_lo <= f[0][0] <= x_hi and p_lo <= f[0][1] <= p_hi]
    found = [f for f in found if grid.x[0] < f[0][0] < grid.x[-1] and grid.p[0] < f[0][1] < grid.p[-1]]
    unique = []
    for r, ok, axis in sorted(found, key=lambda f: (not f[2], f[0][0], f[0][1])):
        if all(np.hypot(*(r - u[0])) > dedupe for u in unique):
            unique.append((r, ok, axis))
    if degenerate:
        # the harmonic line of stagnation swallows the axis crossings; the origin stays
        unique = [u for u in unique if not _on_lines(u[0], degenerate, 2 * cell)]

    positions = np.array([u[0] for u in unique]).reshape(-1, 2)
    points = []
    for k, (r, ok, axis) in enumerate(unique):
        others = np.delete(positions, k, axis=0)
        nearest = np.min(np.hypot(*(others - r).T)) if len(others) else math.inf
        radius = min(4.0 * cell, 0.45 * nearest)
        charge = None
        for _ in range(4):
            try:
                charge = winding_number(flow, r, radius)
                break
            except LoopThroughStagnationError:
                radius *= 0.5
        jx, jp = flow.evaluate([r[0]], [r[1]])
        residual = float(np.hypot(jx[0], jp[0]))
        w_here = abs(flow.wigner.evaluate([r[0]], [r[1]])[0][0])
        crossing = axis and w_here < 1e-8 * np.max(np.abs(flow.wigner.values))
        points.append(
            StagnationPoint(float(r[0]), float(r[1]), charge, residual, float(radius), _classify(charge, crossing), bool(ok))
        )
    return StagnationSet(tuple(points), tuple(degenerate))


def _on_lines(r, lines, distance) -> bool:
    for line in lines:
        if np.min(np.hypot(*(line.points - r).T)) < distance:
            return True
    return False


def fit_circle(points: np.ndarray) -> tuple[np.ndarray, float]:
    """Algebraic least-squares circle (center, radius) through 2-D points."""
    x, p = points[:, 0], points[:, 1]
    a = np.column_stack([x, p, np.ones_like(x)])
    b = x * x + p * p
    (c0, c1, c2), *_ = np.linalg.lstsq(a, b, rcond=None)
    center = np.array([c0 / 2.0, c1 / 2.0])
    return center, float(math.sqrt(c2 + center @ center))
