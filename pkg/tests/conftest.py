import numpy as np
import pytest

from minsurflab.profile import solve_profile
from minsurflab.spectral import ZonalGrid, band_spectrum

N_DIM = 3
L_CUT = 8


@pytest.fixture(scope="session")
def spectrum():
    return band_spectrum(N_DIM, L_CUT)


@pytest.fixture(scope="session")
def profile():
    return solve_profile(N_DIM, 16.0, 8e-3)


@pytest.fixture(scope="session")
def zgrid(spectrum):
    return ZonalGrid(N_DIM, L_CUT, 48)


@pytest.fixture()
def rng():
    return np.random.default_rng(42)
