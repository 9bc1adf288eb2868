"""Bound states on a uniform grid from a three-point finite-difference Hamiltonian."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh_tridiagonal

from .potentials import PotentialModel, UnitsConfig, eval_potential

BOUNDARY_TOLERANCE = 1e-10
# fraction of the grid, at each end, inspected for boundary amplitude
_EDGE_FRACTION = 0.02


class GridTooSmallError(ValueError):
    """A requested state has not decayed before the grid boundary."""


class BoundStateCountError(ValueError):
    """More states requested than the potential binds."""


@dataclass(frozen=True)
class SpatialGrid:
    """n_x uniform nodes x_min + i*dx, i < n_x, with dx = (x_max - x_min)/n_x.

    The node at x_min and the excluded node at x_max carry Dirichlet zeros in
    the eigensolver, so a symmetric window has x = 0 at index n_x/2 and
    x(-x_i) at index n_x - i.
    """

    x_min: float
    x_max: float
    n_x: int

    def __post_init__(self):
        if self.n_x < 64 or self.n_x & (self.n_x - 1):
            raise ValueError(f"n_x must be a power of two >= 64, got {self.n_x}")
        if not self.x_max > self.x_min:
            raise ValueError(f"empty window [{self.x_min}, {self.x_max}]")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_x

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_x)

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "n_x": self.n_x}

    @classmethod
    def from_dict(cls, data: dict) -> SpatialGrid:
        return cls(float(data["x_min"]), float(data["x_max"]), int(data["n_x"]))


def closed_form_energy(model: PotentialModel, n: int, units: UnitsConfig | None = None) -> float:
    """Exact bound-state energy E_n in the rescaled units (hbar = M = 1)."""
    if units is not None and (units.hbar != 1.0 or units.mass != 1.0):
        raise ValueError("closed-form energies assume hbar = M = 1")
    if n < 0:
        raise ValueError(f"state index must be >= 0, got {n}")
    fam = model.family
    if fam == "harmonic":
        return n + 0.5
    if fam == "polynomial":
        raise ValueError("no closed-form energies for polynomial potentials")
    if n >= bound_state_count(model):
        raise BoundStateCountError(f"{model.label()} binds only {bound_state_count(model)} states")
    D = model.depth
    root = math.sqrt(1.0 + 16.0 * D * D)
    if fam == "eckart":
        return ((root + 1.0) * (2 * n + 1) + 2 * n * n) / (8.0 * D)
    if fam == "rosen-morse":
        return ((root - 1.0) * (2 * n + 1) - 2 * n * n) / (8.0 * D)
    return D * (1.0 - (1.0 - (2 * n + 1) / (4.0 * D)) ** 2)


def bound_state_count(model: PotentialModel) -> float:
    """Number of bound states; ``math.inf`` for confining potentials.

    Polynomial truncations are treated as confined by the grid walls, so their
    count is unbounded as well.
    """
    fam = model.family
    if fam == "rosen-morse":
        return math.floor(0.5 * math.sqrt(1.0 + 16.0 * model.depth**2) + 0.5)
    if fam == "morse":
        return math.floor(2.0 * model.depth + 0.5)
    return math.inf


def default_grid(model: PotentialModel, count: int = 4, n_x: int = 2048) -> SpatialGrid:
    """Solver window wide enough for the lowest ``count`` states."""
    fam = model.family
    if fam == "eckart":
        return SpatialGrid(-model.pole, model.pole, n_x)
    if fam == "morse":
        D = model.depth
        # leftwards the wall grows like e^{2|x|/sqrt(2D)}; rightwards the state decays with
        # kappa = sqrt(2 (D - E)) beyond the outer turning point
        e_top = closed_form_energy(model, min(count, bound_state_count(model)) - 1)
        s = model.scale
        right_turn = -math.log(1.0 - math.sqrt(e_top / D)) / s
        kappa = math.sqrt(2.0 * (D - e_top))
        right = max(14.0, (right_turn + 26.0 / kappa) / (1 - 2 * _EDGE_FRACTION))
        return SpatialGrid(-8.0, math.ceil(right), n_x)
    if fam == "rosen-morse":
        D = model.depth
        e_top = closed_form_energy(model, min(count, bound_state_count(model)) - 1)
        s = model.scale
        turn = math.atanh(math.sqrt(e_top / D)) / s
        kappa = math.sqrt(2.0 * (D - e_top))
        half = max(10.0, (turn + 26.0 / kappa) / (1 - 2 * _EDGE_FRACTION))
        return SpatialGrid(-math.ceil(half), math.ceil(half), n_x)
    return SpatialGrid(-10.0, 10.0, n_x)


@dataclass(frozen=True, eq=False)
class EigenstateBasis:
    """Real, normalized, sign-fixed bound states sampled on ``grid``.

    ``states[n]`` holds psi_n at ``grid.x``; sample 0 is the Dirichlet node.
    """

    grid: SpatialGrid
    energies: np.ndarray
    states: np.ndarray
    potential: PotentialModel
    units: UnitsConfig
    drift: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.energies)

    def function(self, n: int) -> CubicSpline:
        """Cubic-spline interpolant of psi_n, zero outside the grid."""
        cache = self.__dict__.setdefault("_splines", {})
        if n not in cache:
            if not 0 <= n < len(self):
                raise IndexError(f"state {n} not in basis of {len(self)} states")
            x = np.append(self.grid.x, self.grid.x_max)
            y = np.append(self.states[n], 0.0)
            cache[n] = _ZeroExtended(CubicSpline(x, y, bc_type="not-a-knot", extrapolate=False))
        return cache[n]

    def derivative(self, n: int) -> _ZeroExtended:
        """Interpolant of psi_n', from the spectral derivative of the samples.

        The Dirichlet node makes the sampled state periodic on the window, so
        the FFT derivative carries no wrap-around error beyond the tail amplitude.
        """
        cache = self.__dict__.setdefault("_dsplines", {})
        if n not in cache:
            if not 0 <= n < len(self):
                raise IndexError(f"state {n} not in basis of {len(self)} states")
            k = 2.0 * math.pi * np.fft.fftfreq(self.grid.n_x, d=self.grid.dx)
            k[self.grid.n_x // 2] = 0.0
            dpsi = np.real(np.fft.ifft(1j * k * np.fft.fft(self.states[n])))
            x = np.append(self.grid.x, self.grid.x_max)
            y = np.append(dpsi, dpsi[0])
            cache[n] = _ZeroExtended(CubicSpline(x, y, bc_type="not-a-knot", extrapolate=False))
        return cache[n]

    def gram(self) -> np.ndarray:
        return self.states @ self.states.T * self.grid.dx

    def to_dict(self) -> dict:
        return {
            "potential": self.potential.to_dict(),
            "units": {"hbar": self.units.hbar, "mass": self.units.mass},
            "grid": self.grid.to_dict(),
            "energies": [float(e) for e in self.energies],
        }


class _ZeroExtended:
    def __init__(self, spline):
        self.spline = spline
        self.lo, self.hi = spline.x[0], spline.x[-1]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self.spline(np.clip(x, self.lo, self.hi))
        return np.where((x < self.lo) | (x > self.hi), 0.0, out)


def _fix_sign(psi: np.ndarray) -> np.ndarray:
    # rightmost lobe positive: the Hermite-function convention psi_n > 0 as x -> +inf
    big = np.flatnonzero(np.abs(psi) > 1e-2 * np.max(np.abs(psi)))
    return psi if psi[big[-1]] > 0 else -psi


def boundary_amplitude(psi: np.ndarray, edge: int | None = None) -> float:
    """Largest |psi| in the outer ``edge`` samples at each end, relative to max |psi|."""
    edge = max(2, int(_EDGE_FRACTION * len(psi))) if edge is None else edge
    peak = np.max(np.abs(psi))
    return float(max(np.max(np.abs(psi[:edge])), np.max(np.abs(psi[-edge:]))) / peak)


def _solve(model, units, grid, count):
    x = grid.x[1:]
    h = grid.dx
    kin = units.hbar**2 / (2.0 * units.mass * h * h)
    diag = 2.0 * kin + eval_potential(model, x)
    off = np.full(len(x) - 1, -kin)
    energies, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, count - 1))
    states = np.zeros((count, grid.n_x))
    states[:, 1:] = vecs.T / math.sqrt(h)
    return energies, states


def solve_bound_states(
    model: PotentialModel,
    units: UnitsConfig | None = None,
    grid: SpatialGrid | None = None,
    count: int = 4,
    *,
    richardson: bool = True,
    tolerance: float = BOUNDARY_TOLERANCE,
) -> EigenstateBasis:
    """Lowest ``count`` bound states of ``model`` on ``grid``.

    With ``richardson`` the three-point problem is also solved at half spacing
    and energies and samples are extrapolated as (4 f_{h/2} - f_h)/3, which
    cancels the O(h**2) stencil error. The extrapolated states are
    re-orthonormalized symmetrically; ``drift`` records the energy change.
    """
    units = units or UnitsConfig()
    grid = grid or default_grid(model, count)
    if count < 1:
        raise ValueError("count must be positive")
    if count > bound_state_count(model):
        raise BoundStateCountError(
            f"{model.label()} binds {bound_state_count(model)} states, {count} requested"
        )
    energies, states = _solve(model, units, grid, count)
    states = np.array([_fix_sign(s) for s in states])
    drift = np.zeros(count)
    if richardson:
        fine = SpatialGrid(grid.x_min, grid.x_max, 2 * grid.n_x)
        fine_e, fine_s = _solve(model, units, fine, count)
        fine_s = np.array([_fix_sign(s) for s in fine_s])[:, ::2]
        extrapolated = (4.0 * fine_e - energies) / 3.0
        drift = extrapolated - energies
        energies = extrapolated
        states = (4.0 * fine_s - states) / 3.0
        # Loewdin orthonormalization: the smallest symmetric correction to unit Gram
        vals, vecs = np.linalg.eigh(states @ states.T * grid.dx)
        states = (vecs @ np.diag(vals**-0.5) @ vecs.T) @ states
    for n in range(count):
        # Eckart grids end on the poles, where psi = 0 is exact
        edge = 0.0 if model.family == "eckart" else boundary_amplitude(states[n])
        if edge > tolerance:
            raise GridTooSmallError(
                f"state {n} has relative amplitude {edge:.2e} at the edge of "
                f"[{grid.x_min:g}, {grid.x_max:g}]; widen the grid"
            )
        if energies[n] >= model.asymptote:
            raise BoundStateCountError(f"state {n} at E={energies[n]:.6g} is not below the asymptote")
    return EigenstateBasis(grid, energies, states, model, units, drift)


def revolution_time(basis_or_energies, m: int, n: int, hbar: float | None = None) -> float:
    """2 pi hbar / |E_n - E_m|, the period of a two-state superposition."""
    if isinstance(basis_or_energies, EigenstateBasis):
        energies = basis_or_energies.energies
        hbar = basis_or_energies.units.hbar if hbar is None else hbar
    else:
        energies = np.asarray(basis_or_energies, dtype=float)
    hbar = 1.0 if hbar is None else hbar
    if m == n:
        raise ValueError("a state has no revolution time with itself")
    gap = abs(energies[n] - energies[m])
    if gap == 0:
        raise ValueError(f"states {m} and {n} are degenerate")
    return 2.0 * math.pi * hbar / gap


def node_count(psi: np.ndarray, rel: float = 1e-6) -> int:
    """Sign changes of psi ignoring its decayed tails."""
    keep = psi[np.abs(psi) > rel * np.max(np.abs(psi))]
    return int(np.count_nonzero(np.diff(np.sign(keep)) != 0))
