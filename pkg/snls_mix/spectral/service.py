"""
Dirichlet sine eigenbasis on [0,1]

Transforms between coefficients and grid values, projectors, Sobolev and
Lebesgue norms, the pointwise nonlinearity |u|^{2 sigma} u and the damped
linear group. Grid values live on x_j = j/(Q+1), where the type-I discrete
sine transform is exactly orthogonal for modes n <= Q.
"""

import math
from functools import lru_cache
from typing import Literal, Optional

import numpy as np
from scipy import fft as sp_fft

from ..config import LP_OVERSAMPLING
from ..utils.errors import DimensionError, ParameterError
from .schemas import SpectralField, PhysicalGrid


def _dst1(x: np.ndarray) -> np.ndarray:
    """Unnormalized DST-I along the last axis, real and imaginary parts separately"""
    if np.iscomplexobj(x):
        return sp_fft.dst(x.real, type=1, axis=-1) + 1j * sp_fft.dst(x.imag, type=1, axis=-1)
    return sp_fft.dst(x, type=1, axis=-1).astype(np.complex128)


class SineBasis:
    """
    Array-level kernels for a fixed truncation M and grid size Q

    Works on raw numpy arrays so the integrator can avoid model construction
    in its inner loop. Coefficient arrays may carry leading batch axes.
    """

    def __init__(self, M: int, Q: Optional[int] = None):
        if M < 1:
            raise DimensionError(f"truncation M must be positive, got {M}")
        Q = M if Q is None else Q
        if Q < M:
            raise DimensionError(f"grid size Q={Q} is smaller than the truncation M={M}")
        self.M = M
        self.Q = Q
        self.modes = np.arange(1, M + 1)
        self.eigenvalues = (self.modes * np.pi) ** 2
        self.points = np.arange(1, Q + 1) / (Q + 1)
        self.h = 1.0 / (Q + 1)

    def to_grid(self, coeffs: np.ndarray) -> np.ndarray:
        padded = np.zeros(coeffs.shape[:-1] + (self.Q,), dtype=np.complex128)
        padded[..., :self.M] = coeffs
        return _dst1(padded) / math.sqrt(2.0)

    def from_grid(self, samples: np.ndarray) -> np.ndarray:
        coeffs = _dst1(samples) / (math.sqrt(2.0) * (self.Q + 1))
        return coeffs[..., :self.M]

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Composite trapezoid over [0,1]; endpoint values are zero"""
        return self.h * np.sum(values, axis=-1)

    def power_integral(self, coeffs: np.ndarray, p: float) -> np.ndarray:
        """int_0^1 |u|^p dx on this grid"""
        return self.integrate(np.abs(self.to_grid(coeffs)) ** p)

    def gradient_sq(self, coeffs: np.ndarray) -> np.ndarray:
        """|grad u|_2^2 = sum mu_n |u_n|^2"""
        return np.sum(self.eigenvalues * np.abs(coeffs) ** 2, axis=-1)

    def mass_sq(self, coeffs: np.ndarray) -> np.ndarray:
        return np.sum(np.abs(coeffs) ** 2, axis=-1)

    def linear_factor(self, t: float, alpha: float) -> np.ndarray:
        return np.exp(-(1j * self.eigenvalues + alpha) * t)


@lru_cache(maxsize=64)
def get_basis(M: int, Q: Optional[int] = None) -> SineBasis:
    """Get a shared SineBasis for (M, Q)"""
    return SineBasis(M, Q)


def nonlinear_grid_size(M: int, sigma: float) -> int:
    """Dealiasing grid for |u|^{2 sigma} u: Q = ceil(sigma + 1) * M"""
    return int(math.ceil(sigma + 1.0)) * M


def lp_grid_size(M: int, p: float) -> int:
    return max(LP_OVERSAMPLING, int(math.ceil(p / 2.0)) + 1) * M


def synthesize(u: SpectralField, Q: int) -> PhysicalGrid:
    """
    Evaluate u(x_j) = sum_n u_n sqrt(2) sin(n pi x_j) on the grid of size Q

    Raises:
        DimensionError: If Q < M
    """
    if Q < u.M:
        raise DimensionError(f"grid size Q={Q} is smaller than M={u.M}")
    return PhysicalGrid(samples=get_basis(u.M, Q).to_grid(u.coeffs))


def analyze(g: PhysicalGrid, M: int) -> SpectralField:
    """
    Discrete sine-transform coefficients of grid values, truncated to M modes

    Raises:
        DimensionError: If Q < M
    """
    if g.Q < M:
        raise DimensionError(f"grid size Q={g.Q} is smaller than M={M}")
    return SpectralField(coeffs=get_basis(M, g.Q).from_grid(g.samples))


def sobolev_norm(u: SpectralField, s: float) -> float:
    """
    ||u||_s = (sum mu_n^s |u_n|^2)^{1/2}; s = 0 gives the L2 norm

    Raises:
        ParameterError: If s < 0
    """
    if s < 0:
        raise ParameterError(f"Sobolev index must be nonnegative, got {s}")
    basis = get_basis(u.M)
    return float(math.sqrt(np.sum(basis.eigenvalues ** s * np.abs(u.coeffs) ** 2)))


def lp_norm(u: SpectralField, p: float, Q: Optional[int] = None) -> float:
    """
    (int_0^1 |u|^p dx)^{1/p} by trapezoid quadrature on an oversampled grid

    Args:
        u: Field
        p: Lebesgue exponent, p >= 1
        Q: Grid size override (defaults to at least 4M)

    Raises:
        ParameterError: If p < 1
    """
    if p < 1:
        raise ParameterError(f"Lebesgue exponent must be >= 1, got {p}")
    Q = lp_grid_size(u.M, p) if Q is None else Q
    value = float(get_basis(u.M, Q).power_integral(u.coeffs, p))
    return value ** (1.0 / p)


def project(u: SpectralField, N: int, part: Literal["low", "high"]) -> SpectralField:
    """
    P_N (part="low") keeps modes n <= N, Q_N (part="high") keeps n > N

    Raises:
        DimensionError: If N is outside [0, M]
    """
    if N < 0 or N > u.M:
        raise DimensionError(f"projector cutoff N={N} outside [0, {u.M}]")
    coeffs = np.array(u.coeffs)
    if part == "low":
        coeffs[N:] = 0.0
    elif part == "high":
        coeffs[:N] = 0.0
    else:
        raise ParameterError(f"unknown projector part '{part}'")
    return SpectralField(coeffs=coeffs)


def nonlinearity(u: SpectralField, sigma: float) -> SpectralField:
    """
    Coefficients of F(u) = |u|^{2 sigma} u, evaluated pointwise on the
    dealiasing grid and re-analyzed; the sign lambda is applied by the caller

    Raises:
        ParameterError: If sigma < 0
    """
    if sigma < 0:
        raise ParameterError(f"nonlinearity exponent must be nonnegative, got {sigma}")
    basis = get_basis(u.M, nonlinear_grid_size(u.M, sigma))
    values = basis.to_grid(u.coeffs)
    return SpectralField(coeffs=basis.from_grid(np.abs(values) ** (2 * sigma) * values))


def linear_flow(u: SpectralField, t: float, alpha: float) -> SpectralField:
    """Damped linear group: u_n -> exp(-i mu_n t - alpha t) u_n"""
    return SpectralField(coeffs=u.coeffs * get_basis(u.M).linear_factor(t, alpha))


def gagliardo_nirenberg_ratio(u: SpectralField, sigma: float) -> float:
    """|u|_{2s+2}^{2s+2} / (||u||_1^s |u|_2^{s+2}); zero for the zero field"""
    grad = sobolev_norm(u, 1.0)
    mass = sobolev_norm(u, 0.0)
    if mass == 0.0:
        return 0.0
    p = 2 * sigma + 2
    return lp_norm(u, p, Q=max(lp_grid_size(u.M, p), nonlinear_grid_size(u.M, sigma))) ** p / (
        grad ** sigma * mass ** (sigma + 2)
    )
