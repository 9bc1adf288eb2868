import math

import pytest

from wignerflow.eigensolver import solve_bound_states
from wignerflow.potentials import PotentialModel
from wignerflow.wigner import PhaseSpaceGrid, default_phase_grid

# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


@pytest.fixture(scope="session")
def models():
    return {
        "harmonic": PotentialModel.harmonic(),
        "eckart": PotentialModel.eckart(),
        "rosen-morse": PotentialModel.rosen_morse(),
        "morse": PotentialModel.morse(),
    }


@pytest.fixture(scope="session")
def bases(models):
    return {name: solve_bound_states(m, count=4) for name, m in models.items()}


@pytest.fixture(scope="session")
def harmonic_basis(bases):
    return bases["harmonic"]


@pytest.fixture(scope="session")
def harmonic_grid():
    return PhaseSpaceGrid.square(-5.0, 5.0, 5.0, 512)


@pytest.fixture(scope="session")
def small_grid():
    """Coarse window for tests that only need topology, not precision."""
    return PhaseSpaceGrid.square(-4.0, 4.0, 4.0, 256)


@pytest.fixture(scope="session")
def grids(models):
    return {name: default_phase_grid(m) for name, m in models.items()}


def harmonic_center(t: float, theta: float) -> tuple[float, float]:
    """Centre of the harmonic Psi_01 zero circle (radius 1/sqrt 2)."""
    r = 1.0 / math.sqrt(2.0)
    cot = math.cos(theta) / math.sin(theta)
    return -r * math.cos(t) * cot, r * math.sin(t) * cot
