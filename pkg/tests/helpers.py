"""Small builders shared by the test modules"""

import numpy as np

from snls_mix.energy import EnergyParams
from snls_mix.estimators import Ensemble
from snls_mix.integrator import SimConfig
from snls_mix.noise import NoiseOperator
from snls_mix.spectral import SpectralField


def make_noise(M, n_star, scale=0.1, forced_only=True):
    """b_n = scale on the forced modes, optionally scale n^-4 above them"""
    b = np.zeros(M)
    b[:n_star] = scale
    if not forced_only:
        b[n_star:] = scale * np.arange(n_star + 1, M + 1, dtype=float) ** -4.0
    return NoiseOperator(b_coeffs=b, n_star=n_star)


def make_sim(params: EnergyParams, M=16, dt=1e-2, T=0.1, n_star=2, scale=0.1, forced_only=False):
    return SimConfig(M=M, dt=dt, T=T, params=params, noise=make_noise(M, n_star, scale, forced_only))


def random_field(rng, M, active=4, amplitude=0.5):
    coeffs = np.zeros(M, dtype=np.complex128)
    n = np.arange(1, active + 1)
    coeffs[:active] = amplitude * (rng.standard_normal(active) + 1j * rng.standard_normal(active)) / n
    return SpectralField(coeffs=coeffs)


def make_ensemble(H, times=None, low=None, mass=None, seed=0):
    """Ensemble from an (n, n_times) array of energies"""
    H = np.asarray(H, dtype=float)
    n, n_times = H.shape
    times = np.arange(n_times, dtype=float) if times is None else np.asarray(times, dtype=float)
    low = np.zeros((n, n_times, 1), dtype=np.complex128) if low is None else low
    mass = np.zeros_like(H) if mass is None else mass
    return Ensemble(times=times, stream_ids=list(range(n)), seed=seed, H=H, mass=mass, low=low)
