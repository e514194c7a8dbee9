import math

import pytest

from atomwva.hilbert import Grid1D, PhysicalParams, QubitState, make_gaussian


@pytest.fixture(scope="session")
def grid():
    return Grid1D(1024, 8.0)


@pytest.fixture(scope="session")
def small_grid():
    return Grid1D(256, 8.0)


@pytest.fixture(scope="session")
def packet(grid):
    return make_gaussian(grid)


@pytest.fixture(scope="session")
def ref_params():
    """lambda = 1 cm, Omega0 / 2pi = 10 kHz, k x0 = pi/4, Omega x_c / delta = 0.1."""
    return PhysicalParams.from_ratio(0.1, wavelength=0.01, Omega0_over_2pi=1e4, k_x0=math.pi / 4)


@pytest.fixture
def mixed_qubit():
    return QubitState.from_populations(0.5, 0.3)
