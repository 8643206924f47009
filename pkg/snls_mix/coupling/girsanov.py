"""
Discrete Girsanov densities for drift-shifted low-mode noise

Low-mode noise is written b_n beta_n with beta a complex Brownian motion whose
real and imaginary parts each have variance t/2. Shifting beta by the drift
sigma_l^{-1} h changes the path law with log-density
    sum_k [2 Re<sigma_l^{-1} h_k, d beta_k> - |sigma_l^{-1} h_k|^2 dt].
"""

import numpy as np

from ..noise import NoiseOperator, increment_batch
from ..utils.errors import SnlsMixError


class InvertibilityError(SnlsMixError):
    """Raised when sigma_l = diag(b_1..b_{N*}) is singular"""
    pass


def sigma_l_inverse(noise: NoiseOperator) -> np.ndarray:
    """
    1 / b_n for n <= N_*

    Raises:
        InvertibilityError: If some b_n vanishes on the forced modes
    """
    forced = noise.b_coeffs[:noise.n_star]
    singular = np.nonzero(forced == 0)[0] + 1
    if singular.size:
        raise InvertibilityError(f"sigma_l is singular: b_n = 0 for n in {singular.tolist()}")
    return 1.0 / forced


def standard_increments(N: int, dt: float, rng: np.random.Generator, n_steps: int) -> np.ndarray:
    """(n_steps, N) increments of the unscaled low-mode Brownian motion beta"""
    return increment_batch(np.ones(N), dt, rng, n_steps)


def girsanov_logdensity(h_path: np.ndarray, beta_path: np.ndarray, noise: NoiseOperator, dt: float) -> float:
    """
    Log Radon–Nikodym derivative of the h-shifted low-mode path law

    Args:
        h_path: (n, >= N_*) control values h(t_k); only modes <= N_* are read
        beta_path: (n, >= N_*) unscaled increments d beta_k
        noise: Noise operator; sigma_l = diag(b_1..b_{N*})
        dt: Step length

    Returns:
        sum_k [2 Re<g_k, d beta_k> - |g_k|^2 dt] with g_k = sigma_l^{-1} h_k

    Raises:
        InvertibilityError: If b_n = 0 for some n <= N_*
    """
    inverse = sigma_l_inverse(noise)
    N = noise.n_star
    g = np.atleast_2d(h_path)[:, :N] * inverse
    beta = np.atleast_2d(beta_path)[:, :N]
    cross = np.sum(g.real * beta.real + g.imag * beta.imag)
    return float(2.0 * cross - np.sum(np.abs(g) ** 2) * dt)
