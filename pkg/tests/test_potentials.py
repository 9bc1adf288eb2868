import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wignerflow.potentials import (
    DomainError,
    PotentialModel,
    eval_potential,
    leading_term,
    potential_derivative,
    truncate,
)

ANHARMONIC = ("eckart", "rosen-morse", "morse")


def test_harmonic_value():
    assert eval_potential(PotentialModel.harmonic(), 1.0) == 0.5


def test_morse_asymptote_is_depth():
    m = PotentialModel.morse(16.0)
    assert eval_potential(m, 400.0) == pytest.approx(16.0, abs=1e-12)
    assert m.asymptote == 16.0


def test_eckart_value_at_one():
    # 4 tan^2(1/sqrt 8); the closed form evaluates to 0.54478
    v = eval_potential(PotentialModel.eckart(4.0), 1.0)
    assert v == pytest.approx(4.0 * math.tan(1.0 / math.sqrt(8.0)) ** 2, rel=1e-14)
    assert v == pytest.approx(0.5448, abs=5e-5)


def test_eckart_value_matches_taylor_series():
    m = PotentialModel.eckart(4.0)
    x = 1.0
    series = sum(potential_derivative(m, 0.0, k) / math.factorial(k) * x**k for k in range(2, 42))
    assert eval_potential(m, x) == pytest.approx(series, rel=1e-10)


def test_eckart_domain_error():
    m = PotentialModel.eckart(4.0)
    with pytest.raises(DomainError):
        eval_potential(m, m.pole)
    with pytest.raises(DomainError):
        potential_derivative(m, np.array([0.0, -5.0]), 3)


def test_harmonic_derivatives():
    m = PotentialModel.harmonic()
    x = np.linspace(-3, 3, 7)
    assert np.all(potential_derivative(m, x, 2) == 1.0)
    for k in (3, 4, 7):
        assert np.all(potential_derivative(m, x, k) == 0.0)


def test_morse_third_derivative_at_origin():
    assert potential_derivative(PotentialModel.morse(16.0), 0.0, 3) == pytest.approx(-3.0 / (4.0 * math.sqrt(2.0)), rel=1e-12)


@pytest.mark.parametrize("depth", [1.0, 4.0, 16.0])
def test_eckart_fourth_derivative_at_origin(depth):
    assert potential_derivative(PotentialModel.eckart(depth), 0.0, 4) == pytest.approx(4.0 / depth, rel=1e-12)


@pytest.mark.parametrize(
    "model, nu, alpha",
    [
        (PotentialModel.eckart(4.0), 4, 1.0 / 24.0),
        (PotentialModel.rosen_morse(4.0), 4, -1.0 / 24.0),
        (PotentialModel.morse(16.0), 3, -1.0 / (2.0 * math.sqrt(32.0))),
    ],
)
def test_truncation_coefficients(model, nu, alpha):
    poly = truncate(model)
    assert poly.family == "polynomial"
    assert poly.coefficients[0][0] == nu
    assert poly.coefficients[0][1] == pytest.approx(alpha, rel=1e-12)
    assert leading_term(model) == (nu, pytest.approx(alpha, rel=1e-12))


def test_truncation_of_harmonic_is_rejected():
    with pytest.raises(ValueError):
        truncate(PotentialModel.harmonic())


def test_truncation_order_must_match_leading_term():
    with pytest.raises(ValueError):
        truncate(PotentialModel.eckart(4.0), 3)


def test_anharmonic_classes():
    assert PotentialModel.eckart().anharmonic_class == "hard"
    assert PotentialModel.rosen_morse().anharmonic_class == "soft"
    assert PotentialModel.morse().anharmonic_class == "odd"
    assert PotentialModel.harmonic().anharmonic_class is None


@pytest.mark.parametrize("family", ANHARMONIC + ("harmonic",))
@pytest.mark.parametrize("depth", [4.0, 16.0, 64.0])
def test_unit_curvature(family, depth):
    m = PotentialModel.from_name(family, None if family == "harmonic" else depth)
    h = 1e-4
    curv = (eval_potential(m, h) - 2.0 * eval_potential(m, 0.0) + eval_potential(m, -h)) / h**2
    assert eval_potential(m, 0.0) == 0.0
    assert abs(curv - 1.0) < 1e-8


@pytest.mark.parametrize("family", ANHARMONIC)
@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_derivatives_match_finite_differences(family, k):
    m = PotentialModel.from_name(family)
    x = np.linspace(-2.0, 2.0, 81)
    h = 1e-3
    lower = (lambda y: eval_potential(m, y)) if k == 1 else (lambda y: potential_derivative(m, y, k - 1))
    fd = (-lower(x + 2 * h) + 8 * lower(x + h) - 8 * lower(x - h) + lower(x - 2 * h)) / (12 * h)
    exact = potential_derivative(m, x, k)
    assert np.max(np.abs(fd - exact)) / np.max(np.abs(exact)) < 1e-6


@pytest.mark.parametrize("family", ["eckart", "rosen-morse"])
def test_even_family_derivative_parity(family):
    m = PotentialModel.from_name(family)
    x = np.linspace(0.1, 2.0, 20)
    for k in range(1, 12):
        assert np.allclose(potential_derivative(m, -x, k), (-1) ** k * potential_derivative(m, x, k), rtol=1e-10, atol=1e-12)


def test_morse_derivatives_lack_parity():
    m = PotentialModel.morse()
    x = np.linspace(0.5, 2.0, 4)
    for k in (1, 2, 3):
        assert not np.allclose(np.abs(potential_derivative(m, -x, k)), np.abs(potential_derivative(m, x, k)))


@pytest.mark.parametrize("family", ANHARMONIC)
def test_truncation_error_slope(family):
    m = PotentialModel.from_name(family)
    poly = truncate(m)
    nu = poly.coefficients[0][0]
    x = np.geomspace(1e-3, 1e-1, 9)
    err = np.abs(eval_potential(m, x) - eval_potential(poly, x))
    slope = np.polyfit(np.log(x), np.log(err), 1)[0]
    assert slope >= nu + 0.9


def test_high_order_derivatives_stay_finite():
    # the series needs up to d^101 V; the recurrence switches to extended precision when it cancels
    m = PotentialModel.rosen_morse(4.0)
    d = potential_derivative(m, np.linspace(-3, 3, 13), 41)
    assert np.all(np.isfinite(d))


@given(st.sampled_from(ANHARMONIC), st.floats(1.0, 100.0))
@settings(max_examples=30, deadline=None)
def test_model_dict_round_trip(family, depth):
    m = PotentialModel.from_name(family, depth)
    assert PotentialModel.from_dict(m.to_dict()) == m


@given(st.floats(-2.0, 2.0), st.floats(1.0, 64.0))
@settings(max_examples=50, deadline=None)
def test_rosen_morse_bounded_by_depth(x, depth):
    m = PotentialModel.rosen_morse(depth)
    v = eval_potential(m, x)
    assert 0.0 <= v < depth


@given(st.floats(-1.5, 1.5), st.sampled_from(ANHARMONIC))
@settings(max_examples=50, deadline=None)
def test_potentials_nonnegative_with_minimum_at_zero(x, family):
    v = eval_potential(PotentialModel.from_name(family), x)
    assert v >= 0.0


def test_invalid_models():
    with pytest.raises(ValueError):
        PotentialModel("square")
    with pytest.raises(ValueError):
        PotentialModel.eckart(-1.0)
    with pytest.raises(ValueError):
        PotentialModel.polynomial({1: 0.3})
    with pytest.raises(ValueError):
        potential_derivative(PotentialModel.harmonic(), 0.0, 0)
