"""Wigner and cross-Wigner fields of eigenstate pairs, and two-state superpositions.

The transform of a pair (a, b) is

    W_ab(x, p) = 1/(pi hbar) sum_k dy conj(a(x + y_k)) b(x - y_k) exp(2i p y_k / hbar)

with y_k = k dx covering the whole window in which the states live. The
coherence a*(x + y) b(x - y) is kept on the (x, y) grid, so momentum
derivatives of any order are spectral weights (2i y / hbar)**r on it rather
than repeated differentiation of W.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.special import eval_laguerre

from .eigensolver import EigenstateBasis, SpatialGrid, revolution_time
from .potentials import PotentialModel, UnitsConfig

MAX_DERIVATIVE_ORDER = 100
LEAKAGE_TOLERANCE = 1e-8
# shift columns whose coherence stays below this fraction of the peak are dropped
TRIM_LEVEL = 1e-24
# point evaluations sample the shift at dy <= pi hbar / (margin * p_max)
POINT_ALIAS_MARGIN = 8.0


class LeakageWarning(UserWarning):
    """The coherence has not decayed at the edge of the y window."""


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Periodic-style phase-space lattice: x from ``spatial``, p_j = p_min + j dp."""

    spatial: SpatialGrid
    p_min: float
    p_max: float
    n_p: int

    def __post_init__(self):
        if self.n_p < 2 or self.n_p & (self.n_p - 1):
            raise ValueError(f"n_p must be a power of two, got {self.n_p}")
        if not math.isclose(self.p_min, -self.p_max, rel_tol=1e-12, abs_tol=1e-12) or self.p_max <= 0:
            raise ValueError(f"momentum window must be symmetric about 0, got [{self.p_min}, {self.p_max}]")

    @classmethod
    def from_spatial(cls, spatial: SpatialGrid, units: UnitsConfig | None = None) -> PhaseSpaceGrid:
        """The FFT-dual momentum lattice of the shift sampling dy = dx."""
        hbar = (units or UnitsConfig()).hbar
        p_max = math.pi * hbar / (2.0 * spatial.dx)
        return cls(spatial, -p_max, p_max, spatial.n_x)

    @classmethod
    def square(cls, x_min, x_max, p_max, n=512) -> PhaseSpaceGrid:
        return cls(SpatialGrid(x_min, x_max, n), -p_max, p_max, n)

    @property
    def x(self) -> np.ndarray:
        return self.spatial.x

    @property
    def dx(self) -> float:
        return self.spatial.dx

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / self.n_p

    @property
    def p(self) -> np.ndarray:
        return self.p_min + self.dp * np.arange(self.n_p)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.spatial.n_x, self.n_p)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.p, indexing="ij")

    def to_dict(self) -> dict:
        return {**self.spatial.to_dict(), "p_min": self.p_min, "p_max": self.p_max, "n_p": self.n_p}

    @classmethod
    def from_dict(cls, data: dict) -> PhaseSpaceGrid:
        return cls(SpatialGrid.from_dict(data), float(data["p_min"]), float(data["p_max"]), int(data["n_p"]))


def default_phase_grid(model: PotentialModel, n: int = 512, p_max: float = 5.0) -> PhaseSpaceGrid:
    """512 x 512 over x in [-5, 5] (Morse [-4, 6]; Eckart clipped inside its poles)."""
    if model.family == "morse":
        return PhaseSpaceGrid.square(-4.0, 6.0, p_max, n)
    if model.family == "eckart":
        half = min(5.0, math.floor(0.9 * model.pole * 4) / 4)
        return PhaseSpaceGrid.square(-half, half, p_max, n)
    return PhaseSpaceGrid.square(-5.0, 5.0, p_max, n)


def covering_phase_grid(basis: EigenstateBasis, n: int = 512, p_max: float = 8.0) -> PhaseSpaceGrid:
    """Grid over the whole solver window, wide enough in p that no probability is cut off."""
    return PhaseSpaceGrid.square(basis.grid.x_min, basis.grid.x_max, p_max, n)


@lru_cache(maxsize=8)
def _fourier_kernel(y: tuple, p: tuple, hbar: float) -> tuple[np.ndarray, np.ndarray]:
    phase = 2.0 * np.outer(np.asarray(y), np.asarray(p)) / hbar
    return np.cos(phase), np.sin(phase)


def _weight(y: np.ndarray, order: int, hbar: float) -> np.ndarray:
    # (2i y / hbar)**r is real for even r; odd r carries a factor i handled by the caller
    return (2.0 * y / hbar) ** order


def _as_function(state, spatial: SpatialGrid):
    if callable(state):
        return state
    samples = np.asarray(state)
    if samples.shape != (spatial.n_x,):
        raise ValueError(f"state samples must match the spatial grid ({spatial.n_x}), got {samples.shape}")
    from scipy.interpolate import CubicSpline

    xs = np.append(spatial.x, spatial.x_max)
    ys = np.append(samples, 0.0)
    spline = CubicSpline(xs, ys, extrapolate=False)
    lo, hi = xs[0], xs[-1]

    def f(x):
        x = np.asarray(x, dtype=float)
        out = spline(np.clip(x, lo, hi))
        return np.where((x < lo) | (x > hi), 0.0, out)

    f.support = (spatial.x_min, spatial.x_max)
    return f


@dataclass(eq=False)
class CrossWignerField:
    """Complex transform of conj(a(x + y)) b(x - y); W_ab = conj(W_ba) for real states."""

    grid: PhaseSpaceGrid
    values: np.ndarray
    pair: tuple
    bra: object
    ket: object
    y: np.ndarray
    units: UnitsConfig
    coherence: np.ndarray = field(repr=False)
    leakage: float = 0.0
    slopes: tuple | None = None
    _derivatives: dict = field(default_factory=dict, repr=False)

    def p_derivative(self, order: int) -> np.ndarray:
        """d^r W_ab / dp^r on the grid, from the spectral weight (2i y/hbar)^r."""
        _check_order(order)
        if order == 0:
            return self.values
        if order not in self._derivatives:
            self._derivatives[order] = _transform(self.coherence, self.y, self.grid.p, self.units.hbar, order)
        return self._derivatives[order]

    def x_derivative(self, p_order: int = 0) -> np.ndarray:
        """d/dx d^r/dp^r W_ab on the grid, differentiating the coherence through a' and b'."""
        if self.slopes is None:
            raise ValueError("x-derivatives need the derivatives of both states")
        key = ("x", p_order)
        if key not in self._derivatives:
            da, db = self.slopes
            x, y = self.grid.x, self.y
            drho = _coherence(da, self.ket, x, y) + _coherence(self.bra, db, x, y)
            self._derivatives[key] = _transform(drho, y, self.grid.p, self.units.hbar, p_order)
        return self._derivatives[key]

    def evaluate(self, x, p, orders=(0,)) -> np.ndarray:
        """p-derivatives of the given orders at scattered points; shape (len(orders), n)."""
        return _point_values(((1.0, self),), x, p, orders)


def _check_order(order):
    if order < 0 or int(order) != order:
        raise ValueError(f"derivative order must be a non-negative integer, got {order}")
    if order > MAX_DERIVATIVE_ORDER:
        raise ValueError(f"derivative order {order} exceeds the configured maximum {MAX_DERIVATIVE_ORDER}")


def _coherence(bra, ket, x, y) -> np.ndarray:
    plus = x[:, None] + y[None, :]
    minus = x[:, None] - y[None, :]
    a = bra(plus.ravel()).reshape(plus.shape)
    b = ket(minus.ravel()).reshape(minus.shape)
    return np.conj(a) * b


def _transform(rho, y, p, hbar, order=0) -> np.ndarray:
    cos, sin = _fourier_kernel(tuple(y), tuple(p), hbar)
    scale = (y[1] - y[0]) / (math.pi * hbar)
    w = rho * (_weight(y, order, hbar) * scale)[None, :]
    return ((w @ cos) + 1j * (w @ sin)) * (1j**order)


def _point_values(terms, x, p, orders) -> np.ndarray:
    """sum_c coef_c W_c and its p-derivatives at scattered points.

    The shift sum runs on a coarser lattice than the grid transform: the
    rectangle rule is spectrally accurate here, and aliasing only sets in at
    momenta near pi hbar / dy, far outside the window. States shared between
    terms are evaluated once.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    for r in orders:
        _check_order(r)
    first = terms[0][1]
    hbar = first.units.hbar
    grid = first.grid
    p_reach = max(abs(grid.p_min), abs(grid.p_max), float(np.max(np.abs(p))))
    stride = max(1, int(math.pi * hbar / (POINT_ALIAS_MARGIN * p_reach * grid.dx)))
    dy = stride * grid.dx
    extent = max(term.y[-1] for _, term in terms)
    y = dy * np.arange(-int(extent / dy) - 1, int(extent / dy) + 2)
    plus = (x[:, None] + y[None, :]).ravel()
    minus = (x[:, None] - y[None, :]).ravel()
    shape = (len(x), len(y))
    cache = {}

    def values(fn, arg, key):
        if (id(fn), key) not in cache:
            cache[(id(fn), key)] = fn(arg).reshape(shape)
        return cache[(id(fn), key)]

    kern = np.exp(2j * p[:, None] * y[None, :] / hbar)
    rho = 0.0
    for coef, term in terms:
        rho = rho + coef * np.conj(values(term.bra, plus, "+")) * values(term.ket, minus, "-")
    rho = rho * kern
    scale = dy / (math.pi * hbar)
    out = np.empty((len(orders), len(x)), dtype=complex)
    for i, r in enumerate(orders):
        out[i] = scale * (rho @ (_weight(y, r, hbar) * (1j**r)))
    return out


def _shift_grid(grid: PhaseSpaceGrid, extent: float) -> np.ndarray:
    k = int(math.floor(extent / grid.dx + 1e-9))
    return grid.dx * np.arange(-k, k + 1)


def wigner_transform(
    bra,
    ket,
    grid: PhaseSpaceGrid,
    units: UnitsConfig | None = None,
    *,
    pair: tuple = (None, None),
    y_extent: float | None = None,
    slopes: tuple | None = None,
) -> CrossWignerField:
    """Cross-Wigner field of two states.

    ``bra`` and ``ket`` are samples on ``grid.spatial`` (zero outside it) or
    callables that are zero outside their support. The shift window defaults
    to half the support width, which holds every non-zero coherence.
    ``slopes`` optionally supplies (bra', ket') for exact x-derivatives.
    """
    units = units or UnitsConfig()
    f, g = _as_function(bra, grid.spatial), _as_function(ket, grid.spatial)
    if y_extent is None:
        supports = [getattr(h, "support", (grid.spatial.x_min, grid.spatial.x_max)) for h in (f, g)]
        width = max(hi for _, hi in supports) - min(lo for lo, _ in supports)
        y_extent = width / 2.0
    y = _shift_grid(grid, y_extent)
    rho = _coherence(f, g, grid.x, y)
    peak = np.max(np.abs(rho))
    edge = np.max(np.abs(rho[:, [0, -1]]))
    leakage = float(edge / peak) if peak > 0 else 0.0
    if leakage > LEAKAGE_TOLERANCE:
        warnings.warn(f"coherence at the shift-window edge is {leakage:.2e} of its peak", LeakageWarning, stacklevel=2)
    if peak > 0:
        # drop shift columns where the coherence has decayed to nothing
        env = np.max(np.abs(rho), axis=0) / peak
        keep = np.flatnonzero(env > TRIM_LEVEL)
        k = min(len(y) // 2, int(np.max(np.abs(keep - len(y) // 2))) + 2) if len(keep) else 1
        centre = len(y) // 2
        y, rho = y[centre - k : centre + k + 1], rho[:, centre - k : centre + k + 1]
    values = _transform(rho, y, grid.p, units.hbar)
    return CrossWignerField(grid, values, tuple(pair), f, g, y, units, rho, leakage, slopes)


def _basis_function(basis: EigenstateBasis, n: int):
    fn = basis.function(n)
    fn.support = (basis.grid.x_min, basis.grid.x_max)
    return fn


def cross_wigner(basis: EigenstateBasis, m: int, n: int, grid: PhaseSpaceGrid) -> CrossWignerField:
    """W_mn of two basis states, cached on the basis."""
    cache = basis.__dict__.setdefault("_cross", {})
    key = (grid, m, n)
    if key not in cache:
        cache[key] = wigner_transform(
            _basis_function(basis, m),
            _basis_function(basis, n),
            grid,
            basis.units,
            pair=(m, n),
            slopes=(basis.derivative(m), basis.derivative(n)),
        )
    return cache[key]


@dataclass(eq=False)
class WignerField:
    """Real W on a grid. ``terms`` expresses W = Re sum_c coef_c * W_c over cross fields."""

    grid: PhaseSpaceGrid
    values: np.ndarray
    source: dict
    time: float = 0.0
    terms: tuple = ()
    units: UnitsConfig = field(default_factory=UnitsConfig)
    time_derivative: np.ndarray | None = field(default=None, repr=False)

    def evaluate(self, x, p, orders=(0,)) -> np.ndarray:
        if not self.terms:
            raise ValueError("point evaluation needs a field built from states")
        return np.real(_point_values(self.terms, x, p, orders))

    def x_derivative(self, p_order: int = 0) -> np.ndarray:
        if not self.terms:
            raise ValueError("x-derivatives need a field built from states")
        out = 0.0
        for coef, term in self.terms:
            out = out + coef * term.x_derivative(p_order)
        return np.real(out)

    def norm(self) -> float:
        return float(self.values.sum() * self.grid.dx * self.grid.dp)

    def x_marginal(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.grid.dp

    def p_marginal(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.grid.dx


def _snap(v: float) -> float:
    return 0.0 if abs(v) < 1e-15 else v


@dataclass(frozen=True)
class TwoStateSpec:
    """Psi = cos(theta) e^{-i E_m t} psi_m + sin(theta) e^{-i E_n t} psi_n.

    With ``rabi_frequency`` the angle runs as theta(t) = Omega_R t / 2 + pi/2.
    """

    basis: EigenstateBasis
    m: int
    n: int
    theta: float = math.pi / 4
    t: float = 0.0
    rabi_frequency: float | None = None

    def __post_init__(self):
        if self.m == self.n:
            raise ValueError("a two-state spec needs distinct indices")
        if not (0 <= self.m < self.n):
            raise ValueError(f"indices must satisfy 0 <= m < n, got ({self.m}, {self.n})")
        if self.n >= len(self.basis):
            raise IndexError(f"state {self.n} not in basis of {len(self.basis)} states")
        if self.rabi_frequency is not None and not self.rabi_frequency > 0:
            raise ValueError("Rabi frequency must be positive")

    @property
    def angle(self) -> float:
        if self.rabi_frequency is None:
            return self.theta
        return 0.5 * self.rabi_frequency * self.t + 0.5 * math.pi

    @property
    def frequency(self) -> float:
        e = self.basis.energies
        return (e[self.n] - e[self.m]) / self.basis.units.hbar

    @property
    def period(self) -> float:
        return revolution_time(self.basis, self.m, self.n)

    def at(self, t: float) -> TwoStateSpec:
        return replace(self, t=float(t))

    def amplitudes(self) -> tuple[float, float]:
        a = self.angle
        return _snap(math.cos(a)), _snap(math.sin(a))

    def describe(self) -> dict:
        out = {"m": self.m, "n": self.n, "theta": self.theta, "t": self.t}
        if self.rabi_frequency is not None:
            out["rabi_frequency"] = self.rabi_frequency
        return out


def eigenstate_field(basis: EigenstateBasis, n: int, grid: PhaseSpaceGrid) -> WignerField:
    cross = cross_wigner(basis, n, n, grid)
    return WignerField(
        grid,
        np.real(cross.values).copy(),
        {"state": n, "potential": basis.potential.to_dict()},
        0.0,
        ((1.0, cross),),
        basis.units,
        np.zeros(grid.shape),
    )


def superposition_field(spec: TwoStateSpec, grid: PhaseSpaceGrid) -> WignerField:
    """W(t) = c^2 W_mm + s^2 W_nn + 2 c s Re[e^{-i w t} W_mn] with w = (E_n - E_m)/hbar."""
    basis = spec.basis
    c, s = spec.amplitudes()
    omega = spec.frequency
    phase = complex(math.cos(omega * spec.t), -math.sin(omega * spec.t))
    terms = []
    if c:
        terms.append((c * c, cross_wigner(basis, spec.m, spec.m, grid)))
    if s:
        terms.append((s * s, cross_wigner(basis, spec.n, spec.n, grid)))
    if c and s:
        terms.append((2.0 * c * s * phase, cross_wigner(basis, spec.m, spec.n, grid)))
    values = np.zeros(grid.shape)
    for coef, term in terms:
        values += np.real(coef * term.values) if isinstance(coef, complex) else coef * np.real(term.values)
    dt = np.zeros(grid.shape)
    if c and s and spec.rabi_frequency is None:
        # d/dt Re[k e^{-iwt} W] = Re[-i w k e^{-iwt} W]
        dt = np.real(-1j * omega * 2.0 * c * s * phase * cross_wigner(basis, spec.m, spec.n, grid).values)
    source = {"potential": basis.potential.to_dict(), **spec.describe()}
    return WignerField(grid, values, source, spec.t, tuple(terms), basis.units, dt)


def momentum_derivative(field: WignerField, order: int, *, dealias: str = "2/3") -> np.ndarray:
    """d^r W / dp^r on the grid.

    Fields built from states differentiate through their coherences (exact
    spectral weights, no grid noise). Bare sampled fields fall back to an FFT
    along p; ``dealias`` then selects the high-wavenumber cutoff: "2/3" keeps
    |k| below two thirds of Nyquist, "none" keeps everything.
    """
    _check_order(order)
    if order == 0:
        return field.values
    if field.terms:
        out = 0.0
        for coef, term in field.terms:
            out = out + coef * term.p_derivative(order)
        return np.real(out)
    grid = field.grid
    k = 2.0 * math.pi * np.fft.fftfreq(grid.n_p, d=grid.dp)
    spec = np.fft.fft(field.values, axis=1)
    mult = (1j * k) ** order
    if dealias == "2/3":
        mult = np.where(np.abs(k) <= (2.0 / 3.0) * np.max(np.abs(k)), mult, 0.0)
    elif dealias != "none":
        raise ValueError(f"unknown dealias mode {dealias!r}")
    return np.real(np.fft.ifft(spec * mult[None, :], axis=1))


def analytic_harmonic_oracle(n: int, grid: PhaseSpaceGrid, hbar: float = 1.0) -> WignerField:
    """Fock-state Wigner function (-1)^n/(pi hbar) exp(-r^2/hbar) L_n(2 r^2/hbar)."""
    if not 0 <= n <= 10:
        raise ValueError(f"oracle supports 0 <= n <= 10, got {n}")
    X, P = grid.mesh()
    r2 = (X * X + P * P) / hbar
    values = (-1) ** n / (math.pi * hbar) * np.exp(-r2) * eval_laguerre(n, 2.0 * r2)
    return WignerField(grid, values, {"oracle": "harmonic", "state": n}, 0.0, (), UnitsConfig(hbar=hbar))


def momentum_amplitude(basis: EigenstateBasis, n: int, p) -> np.ndarray:
    """phi_n(p) = (2 pi hbar)^(-1/2) sum_x psi_n(x) exp(-i p x / hbar) dx."""
    hbar = basis.units.hbar
    p = np.asarray(p, dtype=float)
    kernel = np.exp(-1j * np.outer(p, basis.grid.x) / hbar)
    return kernel @ basis.states[n] * basis.grid.dx / math.sqrt(2.0 * math.pi * hbar)


def state_densities(spec: TwoStateSpec, x, p) -> tuple[np.ndarray, np.ndarray]:
    """|Psi(x, t)|^2 and |Phi(p, t)|^2 of a two-state spec, computed from the states directly."""
    basis = spec.basis
    c, s = spec.amplitudes()
    hbar = basis.units.hbar
    e = basis.energies
    a = c * np.exp(-1j * e[spec.m] * spec.t / hbar)
    b = s * np.exp(-1j * e[spec.n] * spec.t / hbar)
    psi = a * basis.function(spec.m)(x) + b * basis.function(spec.n)(x)
    phi = a * momentum_amplitude(basis, spec.m, p) + b * momentum_amplitude(basis, spec.n, p)
    return np.abs(psi) ** 2, np.abs(phi) ** 2
