"""
Energy, Lyapunov and Foias–Prodi functionals

Array-level kernels (`*_values`) take coefficient arrays with leading batch
axes; the model-level functions wrap them for single fields.
"""

from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy import special
from scipy.integrate import cumulative_trapezoid

from ..config import GAUSS_LEGENDRE_NODES, LOG_SPACE_THRESHOLD
from ..utils.errors import ParameterError, SnlsMixError
from ..spectral import SpectralField, get_basis, lp_grid_size, nonlinear_grid_size
from .schemas import EnergyParams, LyapunovAccumulator, PairHistory


class StateError(SnlsMixError):
    """Raised when a functional needs a constant that has not been calibrated"""
    pass


class CalibrationError(SnlsMixError):
    """Raised when a calibrated constant fails its defining inequality"""
    pass


def quadrature_grid_size(M: int, sigma: float) -> int:
    """Grid resolving |u|^{2 sigma + 2} for M-mode fields"""
    return max(lp_grid_size(M, 2 * sigma + 2), nonlinear_grid_size(M, sigma))


@lru_cache(maxsize=16)
def gauss_legendre_unit(nodes: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss–Legendre nodes and weights mapped to [0, 1]"""
    x, w = special.roots_legendre(nodes)
    return 0.5 * (x + 1.0), 0.5 * w


def power(value, k: float):
    """
    H^k, evaluated as exp(k log H) above LOG_SPACE_THRESHOLD

    Overflow yields inf rather than a floating point warning.
    """
    value = np.asarray(value, dtype=np.float64)
    with np.errstate(over="ignore", divide="ignore"):
        big = value > LOG_SPACE_THRESHOLD
        out = np.where(big, np.exp(k * np.log(np.where(big, value, 1.0))), np.maximum(value, 0.0) ** k)
    return out if out.ndim else float(out)


def h_star_values(coeffs: np.ndarray, params: EnergyParams) -> np.ndarray:
    """H*(u) = |grad u|^2 / 2 - lambda / (2 sigma + 2) |u|_{2 sigma + 2}^{2 sigma + 2}"""
    M = coeffs.shape[-1]
    p = 2 * params.sigma + 2
    basis = get_basis(M, quadrature_grid_size(M, params.sigma))
    return 0.5 * basis.gradient_sq(coeffs) - params.lam / p * basis.power_integral(coeffs, p)


def energy_values(coeffs: np.ndarray, params: EnergyParams) -> np.ndarray:
    """
    Modified energy H on a batch of coefficient vectors

    Raises:
        StateError: If the focusing constant G is not calibrated
    """
    values = h_star_values(coeffs, params)
    if params.focusing:
        if params.G is None:
            raise StateError("modified energy needs a calibrated G in the focusing case")
        mass = get_basis(coeffs.shape[-1]).mass_sq(coeffs)
        values = values + params.G * mass ** (params.mass_exponent / 2.0)
    return values


def h_star(u: SpectralField, params: EnergyParams) -> float:
    return float(h_star_values(u.coeffs, params))


def energy_lower_bound(u: SpectralField, params: EnergyParams) -> float:
    """2 sigma (sigma + 2) / (2 sigma + 2)^2 |grad u|^2, the focusing lower bound on H"""
    s = params.sigma
    return 2 * s * (s + 2) / (2 * s + 2) ** 2 * float(get_basis(u.M).gradient_sq(u.coeffs))


def energy(u: SpectralField, params: EnergyParams) -> float:
    """
    H(u): H* for lambda = -1, H* + G |u|_2^{2 + 4 sigma / (2 - sigma)} for lambda = +1

    Raises:
        StateError: If lambda = +1 and G is not calibrated
        CalibrationError: If lambda = +1 and H falls below its gradient lower bound
    """
    value = float(energy_values(u.coeffs, params))
    if params.focusing:
        bound = energy_lower_bound(u, params)
        if value < bound - 1e-10 * max(1.0, bound):
            raise CalibrationError(f"H={value:.6g} below the gradient lower bound {bound:.6g}; G is too small")
    return value


def powers(u: SpectralField, k: float, params: EnergyParams) -> float:
    """H^k(u)"""
    return power(energy(u, params), k)


def lyapunov_start(u0: SpectralField, k: float, params: EnergyParams, t0: float = 0.0) -> LyapunovAccumulator:
    """Accumulator with an empty integral at time t0"""
    return LyapunovAccumulator(k=k, current=powers(u0, k, params), integral=0.0, t0=t0, t=t0)


def lyapunov_advance(acc: LyapunovAccumulator, h_new: float, dt: float, alpha: float) -> LyapunovAccumulator:
    """Trapezoid update from a precomputed H value"""
    current = power(h_new, acc.k)
    increment = 0.5 * alpha * acc.k * 0.5 * (acc.current + current) * dt
    return LyapunovAccumulator(k=acc.k, current=current, integral=acc.integral + increment, t0=acc.t0, t=acc.t + dt)


def lyapunov_step(acc: LyapunovAccumulator, u_new: SpectralField, dt: float, params: EnergyParams) -> LyapunovAccumulator:
    """
    Advance E_{u,k} by one step of length dt

    Args:
        acc: Accumulator at time t
        u_new: State at time t + dt
        dt: Step length
        params: Energy parameters

    Returns:
        Accumulator at time t + dt
    """
    return lyapunov_advance(acc, energy(u_new, params), dt, params.alpha)


def _phase(w: np.ndarray) -> np.ndarray:
    modulus = np.abs(w)
    return np.divide(w, modulus, out=np.zeros_like(w), where=modulus > 0)


def f_prime_pointwise(w: np.ndarray, v: np.ndarray, sigma: float) -> np.ndarray:
    """
    F'(w)(v) = (sigma + 1) |w|^{2 sigma} v + sigma |w|^{2 sigma - 2} w^2 conj(v)

    The second term uses the phase w/|w| and vanishes where w = 0.
    """
    weight = np.abs(w) ** (2 * sigma)
    return (sigma + 1) * weight * v + sigma * weight * _phase(w) ** 2 * np.conj(v)


def f_prime(u: SpectralField, v: SpectralField, sigma: float) -> SpectralField:
    """Coefficients of F'(u)(v) from the pointwise formula on the dealiasing grid"""
    basis = get_basis(u.M, quadrature_grid_size(u.M, sigma))
    values = f_prime_pointwise(basis.to_grid(u.coeffs), basis.to_grid(v.coeffs), sigma)
    return SpectralField(coeffs=basis.from_grid(values))


def interaction_values(u1: np.ndarray, u2: np.ndarray, r: np.ndarray, sigma: float, nodes: int) -> np.ndarray:
    """Re int_0^1 int_0^1 F'(tau u1 + (1 - tau) u2)(r) conj(r) dtau dx"""
    M = u1.shape[-1]
    basis = get_basis(M, quadrature_grid_size(M, sigma))
    g1, g2, gr = basis.to_grid(u1), basis.to_grid(u2), basis.to_grid(r)
    r_sq = np.abs(gr) ** 2
    r_bar_sq = np.conj(gr) ** 2
    taus, weights = gauss_legendre_unit(nodes)
    total = np.zeros(u1.shape[:-1])
    for tau, weight in zip(taus, weights):
        w = tau * g1 + (1 - tau) * g2
        modulus = np.abs(w) ** (2 * sigma)
        integrand = (sigma + 1) * modulus * r_sq + sigma * modulus * np.real(_phase(w) ** 2 * r_bar_sq)
        total = total + weight * basis.integrate(integrand)
    return total


def j_values(u1: np.ndarray, u2: np.ndarray, r: np.ndarray, params: EnergyParams,
             nodes: int = GAUSS_LEGENDRE_NODES) -> np.ndarray:
    """
    Batched J(u1, u2, r) without the calibration check

    Raises:
        StateError: If lambda = +1 and G or G1 is not calibrated
    """
    basis = get_basis(r.shape[-1])
    value = basis.gradient_sq(r) - params.lam * interaction_values(u1, u2, r, params.sigma, nodes)
    if params.focusing:
        if params.G1 is None:
            raise StateError("J needs a calibrated G1 in the focusing case")
        weight = power(energy_values(u1, params), params.sigma) + power(energy_values(u2, params), params.sigma)
        value = value + params.G1 * weight * basis.mass_sq(r)
    return value


def j_form(u1: SpectralField, u2: SpectralField, r: SpectralField, params: EnergyParams,
           nodes: int = GAUSS_LEGENDRE_NODES, check: bool = True) -> float:
    """
    Foias–Prodi quadratic form
    J = |grad r|^2 - lambda Re int int F'(tau u1 + (1 - tau) u2)(r) conj(r) + [lambda = +1] G1 (H^s(u1) + H^s(u2)) |r|^2

    Args:
        u1, u2: Fields
        r: Difference direction
        params: Energy parameters
        nodes: Gauss–Legendre nodes for the tau integral
        check: Enforce J >= |grad r|^2 / 2

    Raises:
        CalibrationError: If check is set and J < |grad r|^2 / 2
        StateError: If lambda = +1 and G or G1 is not calibrated
    """
    value = float(j_values(u1.coeffs, u2.coeffs, r.coeffs, params, nodes))
    if check:
        half_grad = 0.5 * float(get_basis(r.M).gradient_sq(r.coeffs))
        if value < half_grad - 1e-12 * max(1.0, half_grad):
            raise CalibrationError(f"J={value:.6g} below |grad r|^2/2={half_grad:.6g}; G1 is too small")
    return value


def ell_values(u1: np.ndarray, u2: np.ndarray, params: EnergyParams) -> np.ndarray:
    k = params.lyapunov_power
    return 1.0 + power(energy_values(u1, params), k) + power(energy_values(u2, params), k)


def ell(u1: SpectralField, u2: SpectralField, params: EnergyParams) -> float:
    """l(u1, u2) = 1 + H^{3 sigma + 1}(u1) + H^{3 sigma + 1}(u2)"""
    return float(ell_values(u1.coeffs, u2.coeffs, params))


def jfp_weight(times: np.ndarray, ell_path: np.ndarray, N: int, params: EnergyParams) -> np.ndarray:
    """exp(2 alpha t - Lambda / N^{1/4} int_0^t l ds) with the integral by trapezoid rule"""
    elapsed = times - times[0]
    integral = cumulative_trapezoid(ell_path, times, initial=0.0)
    with np.errstate(over="ignore"):
        return np.exp(2 * params.alpha * elapsed - params.Lambda / N ** 0.25 * integral)


def jfp_accumulate(history: PairHistory, N: int, params: EnergyParams) -> np.ndarray:
    """
    J_FP^N along a pair history

    Args:
        history: Two trajectories on a uniform time grid
        N: Number of forced modes in the weight, N >= 1
        params: Energy parameters with Lambda set

    Returns:
        J_FP^N at every time of the history
    """
    if N < 1:
        raise ParameterError(f"N must be >= 1, got {N}")
    j_path = j_values(history.u1, history.u2, history.r, params)
    weight = jfp_weight(history.times, ell_values(history.u1, history.u2, params), N, params)
    out = weight * j_path
    return np.where(weight == 0.0, 0.0, out)


def gradient_sq(u: SpectralField) -> float:
    return float(get_basis(u.M).gradient_sq(u.coeffs))


def mass_power(coeffs: np.ndarray, params: EnergyParams) -> np.ndarray:
    """|u|_2^{2 + 4 sigma / (2 - sigma)}"""
    return get_basis(coeffs.shape[-1]).mass_sq(coeffs) ** (params.mass_exponent / 2.0)


