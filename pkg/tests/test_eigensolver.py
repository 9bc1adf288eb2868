import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wignerflow.eigensolver import (
    BoundStateCountError,
    GridTooSmallError,
    SpatialGrid,
    bound_state_count,
    closed_form_energy,
    node_count,
    revolution_time,
    solve_bound_states,
)
from wignerflow.potentials import PotentialModel

ANHARMONIC = ("eckart", "rosen-morse", "morse")


def test_harmonic_energies(harmonic_basis):
    assert np.allclose(harmonic_basis.energies[:3], [0.5, 1.5, 2.5], atol=1e-6)


@pytest.mark.parametrize(
    "model, n, value",
    [
        (PotentialModel.eckart(4.0), 0, (math.sqrt(257) + 1) / 32),
        (PotentialModel.eckart(4.0), 1, ((math.sqrt(257) + 1) * 3 + 2) / 32),
        (PotentialModel.rosen_morse(4.0), 0, (math.sqrt(257) - 1) / 32),
        (PotentialModel.morse(16.0), 0, 127 / 256),
        (PotentialModel.morse(16.0), 2, 16 * (1 - (1 - 5 / 64) ** 2)),
    ],
)
def test_closed_form_energies(model, n, value):
    assert closed_form_energy(model, n) == pytest.approx(value, rel=1e-14)


def test_closed_form_reference_values():
    assert closed_form_energy(PotentialModel.eckart(4.0), 0) == pytest.approx(0.53222, abs=1e-5)
    assert closed_form_energy(PotentialModel.eckart(4.0), 1) == pytest.approx(1.65918, abs=1e-5)
    assert closed_form_energy(PotentialModel.rosen_morse(4.0), 0) == pytest.approx(0.46972, abs=1e-5)
    assert closed_form_energy(PotentialModel.morse(16.0), 2) == pytest.approx(2.40234, abs=1e-5)


def test_polynomial_has_no_closed_form():
    with pytest.raises(ValueError):
        closed_form_energy(PotentialModel.polynomial({4: 0.01}), 0)


def test_bound_state_counts():
    assert bound_state_count(PotentialModel.rosen_morse(4.0)) == 8
    assert bound_state_count(PotentialModel.morse(16.0)) == 32
    assert bound_state_count(PotentialModel.harmonic()) == math.inf
    assert bound_state_count(PotentialModel.eckart(4.0)) == math.inf


def test_revolution_times(bases):
    assert revolution_time(bases["harmonic"], 0, 1) == pytest.approx(2 * math.pi, rel=1e-6)
    assert revolution_time(bases["harmonic"], 0, 2) == pytest.approx(math.pi, rel=1e-6)
    # E_1 - E_0 = 1 - 2/(4D) = 31/32 for D = 16
    assert revolution_time(bases["morse"], 0, 1) == pytest.approx(2 * math.pi / (31 / 32), rel=1e-6)
    with pytest.raises(ValueError):
        revolution_time(bases["harmonic"], 1, 1)


@pytest.mark.parametrize("family", ANHARMONIC)
def test_solver_energies_match_closed_forms(bases, family):
    basis = bases[family]
    exact = np.array([closed_form_energy(basis.potential, n) for n in range(4)])
    assert np.max(np.abs(basis.energies - exact) / exact) < 1e-4


@pytest.mark.parametrize("family", ANHARMONIC + ("harmonic",))
def test_orthonormality(bases, family):
    assert np.max(np.abs(bases[family].gram() - np.eye(4))) < 1e-8


@pytest.mark.parametrize("family", ["harmonic", "eckart", "rosen-morse"])
def test_parity(bases, family):
    basis = bases[family]
    g = basis.grid
    # node i mirrors to node n_x - i on a symmetric window
    for n in range(4):
        psi = basis.states[n]
        mirrored = np.concatenate([[psi[0]], psi[:0:-1]])
        assert np.max(np.abs(mirrored - (-1) ** n * psi)) < 1e-8
    assert g.x_min == -g.x_max


@pytest.mark.parametrize("family", ANHARMONIC + ("harmonic",))
def test_node_count(bases, family):
    for n in range(4):
        assert node_count(bases[family].states[n]) == n


@pytest.mark.parametrize("family", ANHARMONIC + ("harmonic",))
def test_sign_convention_rightmost_lobe_positive(bases, family):
    basis = bases[family]
    for n in range(4):
        psi = basis.states[n]
        big = np.flatnonzero(np.abs(psi) > 1e-3 * np.max(np.abs(psi)))
        assert psi[big[-1]] > 0


def test_grid_too_small():
    with pytest.raises(GridTooSmallError):
        solve_bound_states(PotentialModel.harmonic(), grid=SpatialGrid(-2.0, 2.0, 256), count=2)


def test_too_many_states():
    with pytest.raises(BoundStateCountError):
        solve_bound_states(PotentialModel.rosen_morse(4.0), count=9)


def test_richardson_improves_energy():
    m = PotentialModel.morse(16.0)
    grid = SpatialGrid(-8.0, 14.0, 512)
    plain = solve_bound_states(m, grid=grid, count=2, richardson=False)
    extra = solve_bound_states(m, grid=grid, count=2)
    exact = closed_form_energy(m, 1)
    assert abs(extra.energies[1] - exact) < abs(plain.energies[1] - exact) / 10


def test_spatial_grid_validation():
    with pytest.raises(ValueError):
        SpatialGrid(-1.0, 1.0, 100)
    with pytest.raises(ValueError):
        SpatialGrid(1.0, -1.0, 128)


@given(st.floats(2.0, 40.0), st.integers(0, 3))
@settings(max_examples=40, deadline=None)
def test_energy_orderings(depth, n):
    # bound spectra: Eckart above, Rosen-Morse below the harmonic ladder
    e = closed_form_energy(PotentialModel.eckart(depth), n)
    r_model = PotentialModel.rosen_morse(depth)
    assert e > n + 0.5
    if n < bound_state_count(r_model):
        assert closed_form_energy(r_model, n) < n + 0.5


@given(st.floats(2.0, 40.0))
@settings(max_examples=40, deadline=None)
def test_morse_spacing_shrinks(depth):
    m = PotentialModel.morse(depth)
    count = min(4, bound_state_count(m))
    e = [closed_form_energy(m, n) for n in range(count)]
    gaps = np.diff(e)
    assert np.all(gaps > 0) and np.all(np.diff(gaps) < 0)
