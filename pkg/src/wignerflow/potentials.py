"""Rescaled one-dimensional potentials with exact derivatives of every order.

Every family is scaled so that V(0) = 0 and V''(0) = 1, which fixes the harmonic
reference x**2/2 with circular phase-space orbits (M = k = hbar = 1).

    harmonic      x**2 / 2
    eckart        D tan**2(x / sqrt(2D))          hard, even
    rosen-morse   D tanh**2(x / sqrt(2D))         soft, even
    morse         D (1 - exp(-x / sqrt(2D)))**2   odd
    polynomial    x**2 / 2 + sum_nu alpha_nu x**nu
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np

FAMILIES = ("harmonic", "eckart", "rosen-morse", "morse", "polynomial")
DEFAULT_DEPTH = {"eckart": 4.0, "rosen-morse": 4.0, "morse": 16.0}

# relative condition number above which tanh-polynomials are re-evaluated in mpmath
_CANCELLATION_LIMIT = 1e4


class DomainError(ValueError):
    """Position outside the region where the potential is finite."""


@dataclass(frozen=True)
class UnitsConfig:
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.mass > 0):
            raise ValueError(f"hbar and mass must be positive, got {self.hbar}, {self.mass}")


@dataclass(frozen=True)
class PotentialModel:
    family: str
    depth: float | None = None
    coefficients: tuple[tuple[int, float], ...] = field(default=())

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown potential family {self.family!r}; expected one of {FAMILIES}")
        if self.family in DEFAULT_DEPTH:
            if self.depth is None or not self.depth > 0:
                raise ValueError(f"{self.family} potential needs a depth D > 0, got {self.depth}")
        elif self.depth is not None:
            raise ValueError(f"{self.family} potential takes no depth")
        if self.family == "polynomial":
            coeffs = tuple(sorted((int(nu), float(a)) for nu, a in self.coefficients))
            powers = [nu for nu, _ in coeffs]
            if len(set(powers)) != len(powers):
                raise ValueError("repeated power in polynomial coefficients")
            if any(nu < 2 for nu in powers):
                raise ValueError("polynomial terms below x**2 would break V(0) = 0 and V'(0) = 0")
            quad = dict(coeffs).get(2, 0.5)
            if quad != 0.5:
                raise ValueError(f"quadratic coefficient must be exactly 1/2, got {quad}")
            object.__setattr__(self, "coefficients", tuple((nu, a) for nu, a in coeffs if nu != 2))
        elif self.coefficients:
            raise ValueError(f"{self.family} potential takes no coefficients")

    # constructors with the figure defaults

    @classmethod
    def harmonic(cls) -> PotentialModel:
        return cls("harmonic")

    @classmethod
    def eckart(cls, depth: float = DEFAULT_DEPTH["eckart"]) -> PotentialModel:
        return cls("eckart", float(depth))

    @classmethod
    def rosen_morse(cls, depth: float = DEFAULT_DEPTH["rosen-morse"]) -> PotentialModel:
        return cls("rosen-morse", float(depth))

    @classmethod
    def morse(cls, depth: float = DEFAULT_DEPTH["morse"]) -> PotentialModel:
        return cls("morse", float(depth))

    @classmethod
    def polynomial(cls, coefficients: dict[int, float]) -> PotentialModel:
        return cls("polynomial", None, tuple(coefficients.items()))

    @classmethod
    def from_name(cls, family: str, depth: float | None = None) -> PotentialModel:
        if family in DEFAULT_DEPTH:
            return cls(family, float(DEFAULT_DEPTH[family] if depth is None else depth))
        return cls(family)

    # derived quantities

    @property
    def scale(self) -> float:
        """Inverse length 1/sqrt(2D) inside the transcendental families."""
        return 1.0 / math.sqrt(2.0 * self.depth)

    @property
    def pole(self) -> float:
        """Half-width of the Eckart well (infinite for every other family)."""
        if self.family == "eckart":
            return math.pi * math.sqrt(2.0 * self.depth) / 2.0
        return math.inf

    @property
    def asymptote(self) -> float:
        """Energy above which states are unbound (infinite for confining families)."""
        if self.family in ("rosen-morse", "morse"):
            return self.depth
        return math.inf

    @property
    def is_even(self) -> bool:
        if self.family == "polynomial":
            return all(nu % 2 == 0 for nu, _ in self.coefficients)
        return self.family != "morse"

    @property
    def anharmonic_class(self) -> str | None:
        """'hard', 'soft' or 'odd' from the leading non-quadratic Taylor term."""
        if self.family == "harmonic":
            return None
        nu, alpha = leading_term(self)
        if nu % 2:
            return "odd"
        return "hard" if alpha > 0 else "soft"

    def to_dict(self) -> dict:
        out = {"family": self.family, "D": self.depth}
        out["coefficients"] = [[nu, a] for nu, a in self.coefficients]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> PotentialModel:
        coeffs = tuple((int(nu), float(a)) for nu, a in data.get("coefficients") or ())
        depth = data.get("D")
        return cls(data["family"], None if depth is None else float(depth), coeffs)

    def label(self) -> str:
        if self.family == "polynomial":
            terms = "".join(f"{a:+g}x^{nu}" for nu, a in self.coefficients)
            return f"polynomial(x^2/2{terms})"
        if self.depth is None:
            return self.family
        return f"{self.family}(D={self.depth:g})"


@lru_cache(maxsize=None)
def _trig_poly(order: int, hyperbolic: bool) -> tuple[int, ...]:
    """Integer coefficients c_i with d^k/du^k T(u)**2 = sum_i c_i T**i.

    T = tan u obeys T' = 1 + T**2 and T = tanh u obeys T' = 1 - T**2, so every
    derivative stays a polynomial in T.
    """
    if order == 0:
        return (0, 0, 1)
    prev = _trig_poly(order - 1, hyperbolic)
    deriv = [i * c for i, c in enumerate(prev)][1:]
    sign = -1 if hyperbolic else 1
    out = [0] * (len(deriv) + 2)
    for i, c in enumerate(deriv):
        out[i] += c
        out[i + 2] += sign * c
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return tuple(out)


def _horner(coeffs, t):
    acc = np.zeros_like(t)
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


def _eval_trig_poly(order: int, hyperbolic: bool, t: np.ndarray) -> np.ndarray:
    coeffs = _trig_poly(order, hyperbolic)
    fcoeffs = [float(c) for c in coeffs]
    value = _horner(fcoeffs, t)
    if not hyperbolic:
        # tan-polynomials have non-negative coefficients and definite parity: no cancellation
        return value
    bound = _horner([abs(c) for c in fcoeffs], np.abs(t))
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = bound / np.abs(value)
    bad = ~(cond < _CANCELLATION_LIMIT)
    if np.any(bad):
        flat_t, flat_v, flat_c = t.ravel(), value.ravel(), cond.ravel()
        for i in np.flatnonzero(bad.ravel()):
            digits = 20 + int(math.log10(flat_c[i])) if np.isfinite(flat_c[i]) else 60
            with mpmath.workdps(digits):
                tm = mpmath.mpf(float(flat_t[i]))
                flat_v[i] = float(mpmath.polyval(list(reversed(coeffs)), tm))
        value = flat_v.reshape(t.shape)
    return value


def _check_domain(model: PotentialModel, x: np.ndarray):
    if model.family == "eckart" and np.any(np.abs(x) >= model.pole):
        worst = float(np.max(np.abs(x)))
        raise DomainError(
            f"Eckart potential with D={model.depth:g} is only finite for |x| < {model.pole:.6g}; got |x| = {worst:.6g}"
        )


def eval_potential(model: PotentialModel, x):
    """V(x) in closed form. Scalars in, scalars out."""
    xa = np.asarray(x, dtype=float)
    _check_domain(model, xa)
    fam = model.family
    if fam == "harmonic":
        v = 0.5 * xa**2
    elif fam == "polynomial":
        v = 0.5 * xa**2
        for nu, a in model.coefficients:
            v = v + a * xa**nu
    elif fam == "eckart":
        v = model.depth * np.tan(xa * model.scale) ** 2
    elif fam == "rosen-morse":
        v = model.depth * np.tanh(xa * model.scale) ** 2
    else:
        v = model.depth * (-np.expm1(-xa * model.scale)) ** 2
    return v if np.ndim(x) else float(v)


def potential_derivative(model: PotentialModel, x, order: int):
    """Exact k-th derivative of V at x, k >= 1."""
    if order < 1 or int(order) != order:
        raise ValueError(f"derivative order must be a positive integer, got {order}")
    order = int(order)
    xa = np.asarray(x, dtype=float)
    _check_domain(model, xa)
    fam = model.family
    if fam == "harmonic":
        d = xa.copy() if order == 1 else np.full_like(xa, 1.0 if order == 2 else 0.0)
    elif fam == "polynomial":
        d = xa.copy() if order == 1 else np.full_like(xa, 1.0 if order == 2 else 0.0)
        for nu, a in model.coefficients:
            if order <= nu:
                d = d + a * (math.factorial(nu) / math.factorial(nu - order)) * xa ** (nu - order)
    elif fam in ("eckart", "rosen-morse"):
        s = model.scale
        u = xa * s
        t = np.tanh(u) if fam == "rosen-morse" else np.tan(u)
        d = model.depth * s**order * _eval_trig_poly(order, fam == "rosen-morse", t)
    else:
        # D (1 - 2 e^{-sx} + e^{-2sx}) differentiated term by term
        s = model.scale
        e = np.exp(-s * xa)
        d = model.depth * (-s) ** order * (2.0**order * e * e - 2.0 * e)
    return d if np.ndim(x) else float(d)


def taylor_coefficient(model: PotentialModel, power: int) -> float:
    """Coefficient of x**power in the expansion of V about its minimum."""
    return potential_derivative(model, 0.0, power) / math.factorial(power)


def leading_term(model: PotentialModel) -> tuple[int, float]:
    """(nu, alpha_nu) of the first non-vanishing Taylor term beyond x**2/2."""
    if model.family == "harmonic":
        raise ValueError("the harmonic potential has no anharmonic term")
    if model.family == "polynomial":
        if not model.coefficients:
            raise ValueError("polynomial without anharmonic terms")
        return model.coefficients[0]
    nu = 3 if model.family == "morse" else 4
    return nu, taylor_coefficient(model, nu)


def truncate(model: PotentialModel, order: int | None = None) -> PotentialModel:
    """Polynomial x**2/2 + alpha_nu x**nu keeping the leading anharmonic term.

    The returned model's ``coefficients`` hold the single (nu, alpha_nu) pair.
    """
    if model.family == "harmonic":
        raise ValueError("the harmonic potential has no anharmonic term to keep")
    nu_lead, alpha_lead = leading_term(model)
    nu = nu_lead if order is None else int(order)
    if nu not in (3, 4):
        raise ValueError(f"truncation order must be 3 or 4, got {nu}")
    if nu != nu_lead:
        raise ValueError(f"{model.label()} has leading anharmonic order {nu_lead}, not {nu}")
    return PotentialModel.polynomial({nu: alpha_lead})
