import numpy as np
import pytest

from snls_mix.coupling import CouplingConfig
from snls_mix.energy import EnergyParams

from helpers import make_sim


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def cubic():
    """Defocusing cubic equation with unit damping"""
    return EnergyParams(sigma=1.0, lam=-1, alpha=1.0)


@pytest.fixture
def linear():
    """sigma = 0: the nonlinearity is a constant phase rotation"""
    return EnergyParams(sigma=0.0, lam=-1, alpha=1.0)


@pytest.fixture
def small_sim(cubic):
    return make_sim(cubic)


@pytest.fixture
def coupling_cfg():
    return CouplingConfig(T=0.1, d0=0.5, R0=10.0, N_star=2)
