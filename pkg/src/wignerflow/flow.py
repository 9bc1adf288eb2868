"""Truncated Wigner flow, continuity check, streamlines and the vortex-shift estimate.

    J_x = p W / M
    J_p = -sum_{l=0..L} (-1)^l (hbar/2)^{2l} / (2l+1)! * d^{2l}W/dp^{2l} * d^{2l+1}V/dx^{2l+1}
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .potentials import PotentialModel, UnitsConfig, leading_term, potential_derivative
from .wigner import TwoStateSpec, WignerField, momentum_derivative, superposition_field

DEFAULT_CUTOFF = 10
MAX_CUTOFF = 50


def _series_terms(model: PotentialModel, cutoff: int) -> list[int]:
    """Indices l whose potential derivative d^{2l+1}V is not identically zero."""
    if not 0 <= cutoff <= MAX_CUTOFF or int(cutoff) != cutoff:
        raise ValueError(f"cutoff L must be an integer in [0, {MAX_CUTOFF}], got {cutoff}")
    if model.family == "harmonic":
        return [0]
    if model.family == "polynomial":
        top = max([2] + [nu for nu, _ in model.coefficients])
        return [l for l in range(cutoff + 1) if 2 * l + 1 <= top]
    return list(range(cutoff + 1))


def _series_weight(l: int, hbar: float) -> float:
    return (-1) ** l * (0.5 * hbar) ** (2 * l) / math.factorial(2 * l + 1)


@dataclass(eq=False)
class FlowField:
    """(J_x, J_p) of a Wigner field on its grid, truncated after L + 1 terms."""

    wigner: WignerField
    potential: PotentialModel
    cutoff: int
    jx: np.ndarray
    jp: np.ndarray
    units: UnitsConfig = field(default_factory=UnitsConfig)

    @property
    def grid(self):
        return self.wigner.grid

    @property
    def time(self) -> float:
        return self.wigner.time

    @property
    def source(self) -> dict:
        return self.wigner.source

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.jx, self.jp)

    def evaluate(self, x, p, *, quantum_only: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Exact (J_x, J_p) at scattered points, bypassing the grid.

        ``quantum_only`` drops the classical -W dV/dx term from J_p; on a W
        zero line what remains is the whole of J_p.
        """
        _, jx, jp = self.components(x, p, quantum_only=quantum_only)
        return jx, jp

    def components(self, x, p, *, quantum_only: bool = False):
        """(W, J_x, J_p) at scattered points from one pass over the states."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        p = np.atleast_1d(np.asarray(p, dtype=float))
        ls = _series_terms(self.potential, self.cutoff)
        derivs = self.wigner.evaluate(x, p, orders=tuple(2 * l for l in ls))
        hbar = self.units.hbar
        jx = p * derivs[0] / self.units.mass
        jp = np.zeros_like(jx)
        for row, l in zip(derivs, ls):
            if l == 0 and quantum_only:
                continue
            jp -= _series_weight(l, hbar) * row * potential_derivative(self.potential, x, 2 * l + 1)
        return derivs[0], jx, jp

    def sample(self, x, p, component: str = "Jp") -> np.ndarray:
        """Exact value of one component: 'Jx', 'Jp' or 'W'."""
        w, jx, jp = self.components(x, p)
        return {"W": w, "Jx": jx, "Jp": jp}[component]


def flow_field(wigner: WignerField, model: PotentialModel, cutoff: int = DEFAULT_CUTOFF, *, dealias: str = "2/3") -> FlowField:
    """Grid flow from a Wigner field and the potential's odd derivatives up to 2L+1."""
    units = wigner.units
    ls = _series_terms(model, cutoff)
    x = wigner.grid.x[:, None]
    jx = wigner.grid.p[None, :] * wigner.values / units.mass
    jp = np.zeros_like(wigner.values)
    for l in ls:
        dv = potential_derivative(model, wigner.grid.x, 2 * l + 1)[:, None]
        if l == 0 and model.family == "harmonic":
            jp = -x * wigner.values
            continue
        jp -= _series_weight(l, units.hbar) * momentum_derivative(wigner, 2 * l, dealias=dealias) * dv
    return FlowField(wigner, model, int(cutoff), jx, jp, units)


@dataclass(frozen=True)
class ResidualReport:
    field: np.ndarray
    max_norm: float
    l2_norm: float


def continuity_residual(spec: TwoStateSpec, grid, cutoff: int = DEFAULT_CUTOFF) -> ResidualReport:
    """dW/dt + dJ_x/dx + dJ_p/dp with the analytic time derivative of the superposition.

    Both divergences are differentiated through the state coherences, so the
    residual measures only the truncation of the series and the eigenstate error.
    """
    if spec.rabi_frequency is not None:
        raise ValueError("the continuity check needs a fixed mixing angle")
    w = superposition_field(spec, grid)
    model = spec.basis.potential
    units = spec.basis.units
    div = grid.p[None, :] * w.x_derivative() / units.mass
    for l in _series_terms(model, cutoff):
        dv = potential_derivative(model, grid.x, 2 * l + 1)[:, None]
        div -= _series_weight(l, units.hbar) * momentum_derivative(w, 2 * l + 1) * dv
    res = w.time_derivative + div
    l2 = float(np.sqrt(np.sum(res * res) * grid.dx * grid.dp))
    return ResidualReport(res, float(np.max(np.abs(res))), l2)


def harmonic_origin_moments(m: int, n: int, hbar: float = 1.0) -> tuple[float, float]:
    """(W_mn, d^2W_mn/dp^2) at the origin for harmonic eigenstates (M = omega = 1).

    W_mn(0, 0) = (-1)^n delta_mn / (pi hbar); the p-curvature is
    -4 (-1)^n <m|x^2|n> / (pi hbar^3).
    """
    if m == n:
        x2 = hbar * (2 * n + 1) / 2.0
    elif abs(m - n) == 2:
        k = max(m, n)
        x2 = hbar * math.sqrt(k * (k - 1)) / 2.0
    else:
        x2 = 0.0
    sign = (-1) ** n
    value = sign / (math.pi * hbar) if m == n else 0.0
    return value, -4.0 * sign * x2 / (math.pi * hbar**3)


def vortex_displacement_approx(model: PotentialModel, spec: TwoStateSpec, times, *, frequency: float | None = None) -> np.ndarray:
    """First-order x-shift of the origin stagnation point along the time axis.

    delta_x = (hbar^2 / 24) nu (nu-1) (nu-2) alpha_nu x^{nu-3} * (d^2_p W / W)(0, 0)
    evaluated with harmonic-reference W at x = 0, so only nu = 3 shifts. The
    phase runs at ``frequency`` (default: the spec's energy gap). NaN marks
    times where the reference W vanishes at the origin.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    hbar = spec.basis.units.hbar
    if model.family == "harmonic":
        return np.zeros_like(times)
    nu, alpha = leading_term(model)
    if nu != 3:
        return np.zeros_like(times)
    omega = spec.frequency if frequency is None else frequency
    out = np.empty_like(times)
    m, n = spec.m, spec.n
    w_mm, c_mm = harmonic_origin_moments(m, m, hbar)
    w_nn, c_nn = harmonic_origin_moments(n, n, hbar)
    w_mn, c_mn = harmonic_origin_moments(m, n, hbar)
    for i, t in enumerate(times):
        c, s = spec.at(t).amplitudes()
        phase = math.cos(omega * t)
        w = c * c * w_mm + s * s * w_nn + 2 * c * s * phase * w_mn
        curv = c * c * c_mm + s * s * c_nn + 2 * c * s * phase * c_mn
        out[i] = math.nan if abs(w) < 1e-14 else hbar**2 / 24.0 * 6.0 * alpha * curv / w
    return out


@dataclass(frozen=True)
class Streamline:
    points: np.ndarray
    speed: np.ndarray
    closed: bool
    stagnant: bool = False


def integrate_streamline(
    flow: FlowField,
    seed,
    step: float | None = None,
    max_length: float = 50.0,
    *,
    tolerance: float = 1e-10,
) -> Streamline:
    """RK4 in arc length through the bilinearly interpolated grid flow.

    Stops at the grid edge, after ``max_length``, where |J| drops below
    ``tolerance`` relative to its grid maximum, or on returning to the seed.
    """
    grid = flow.grid
    step = 0.5 * min(grid.dx, grid.dp) if step is None else step
    x, p = grid.x, grid.p
    jx = RegularGridInterpolator((x, p), flow.jx, bounds_error=False, fill_value=None)
    jp = RegularGridInterpolator((x, p), flow.jp, bounds_error=False, fill_value=None)
    floor = tolerance * float(np.max(flow.magnitude()))
    lo = np.array([x[0], p[0]])
    hi = np.array([x[-1], p[-1]])

    def velocity(r):
        v = np.array([jx(r)[0], jp(r)[0]])
        return v, float(np.hypot(*v))

    r = np.asarray(seed, dtype=float)
    v, speed = velocity(r)
    if speed <= floor:
        return Streamline(np.empty((0, 2)), np.empty(0), False, True)

    def direction(r):
        v, s = velocity(r)
        return v / s if s > floor else np.zeros(2)

    pts, speeds = [r.copy()], [speed]
    length = 0.0
    closed = False
    while length < max_length:
        k1 = direction(r)
        k2 = direction(r + 0.5 * step * k1)
        k3 = direction(r + 0.5 * step * k2)
        k4 = direction(r + step * k3)
        r = r + step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        length += step
        if np.any(r < lo) or np.any(r > hi):
            break
        _, speed = velocity(r)
        pts.append(r.copy())
        speeds.append(speed)
        if speed <= floor:
            break
        if length > 10 * step and np.hypot(*(r - pts[0])) < 0.5 * step:
            closed = True
            break
    return Streamline(np.array(pts), np.array(speeds), closed)


def signed_area(points: np.ndarray) -> float:
    """Shoelace area; positive for counterclockwise polylines."""
    x, p = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x * np.roll(p, -1) - np.roll(x, -1) * p))
