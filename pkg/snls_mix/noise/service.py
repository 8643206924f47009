"""
Noise operator service: validation, Hilbert–Schmidt norms and Wiener increments
"""

import numpy as np
from loguru import logger
from scipy import stats

from ..utils.errors import ParameterError
from .schemas import NoiseOperator, WienerIncrement, NoiseValidationReport

# Decay needed for B_3 < infinity as M -> infinity
REQUIRED_DECAY_EXPONENT = -4.0


def _eigenvalues(M: int) -> np.ndarray:
    return (np.arange(1, M + 1) * np.pi) ** 2


def hs_norm(noise: NoiseOperator, s: float) -> float:
    """
    B_s = sum_n mu_n^s b_n^2

    Raises:
        ParameterError: If s is outside [0, 3]
    """
    if s < 0 or s > 3:
        raise ParameterError(f"Hilbert-Schmidt index must lie in [0, 3], got {s}")
    return float(np.sum(_eigenvalues(noise.M) ** s * noise.b_coeffs ** 2))


def validate(noise: NoiseOperator) -> NoiseValidationReport:
    """
    Check b_n > 0 for n <= N_*, report B_0..B_3 and the empirical decay exponent

    Returns:
        Report; failures are carried in the report, never raised
    """
    forced = noise.b_coeffs[:noise.n_star]
    offending = [int(n) for n in np.nonzero(forced <= 0)[0] + 1]
    warnings = []

    positive = np.nonzero(noise.b_coeffs > 0)[0]
    decay_exponent = None
    decay_ok = None
    if positive.size >= 2:
        fit = stats.linregress(np.log(positive + 1.0), np.log(noise.b_coeffs[positive]))
        decay_exponent = float(fit.slope)
        decay_ok = bool(decay_exponent <= REQUIRED_DECAY_EXPONENT + 1e-9)
        if not decay_ok:
            warnings.append(
                f"b_n decays like n^{decay_exponent:.2f}, slower than n^{REQUIRED_DECAY_EXPONENT:.0f}"
            )
    else:
        warnings.append("fewer than two forced modes, decay exponent undefined")

    if offending:
        warnings.append(f"b_n vanishes on forced modes {offending}")

    report = NoiseValidationReport(
        passed=not offending,
        offending_modes=offending,
        hs_norms={str(s): hs_norm(noise, s) for s in (0, 1, 2, 3)},
        decay_exponent=decay_exponent,
        decay_ok=decay_ok,
        warnings=warnings,
    )
    for message in warnings:
        logger.warning(message, n_star=noise.n_star)
    return report


def increment_batch(b_coeffs: np.ndarray, dt: float, rng: np.random.Generator, n_steps: int) -> np.ndarray:
    """
    Draw n_steps consecutive increments of b dW as an (n_steps, M) array

    Step k consumes the k-th block of 2M standard normals (real parts, then
    imaginary parts), so one bulk draw equals n_steps single draws.
    """
    if dt <= 0:
        raise ParameterError(f"time step must be positive, got {dt}")
    normals = rng.standard_normal((n_steps, 2, b_coeffs.size))
    return b_coeffs * (normals[:, 0, :] + 1j * normals[:, 1, :]) * np.sqrt(dt / 2.0)


def sample_increment(noise: NoiseOperator, dt: float, rng: np.random.Generator) -> WienerIncrement:
    """
    One Wiener increment b dW over a step dt

    Raises:
        ParameterError: If dt <= 0
    """
    return WienerIncrement(delta_w=increment_batch(noise.b_coeffs, dt, rng, 1)[0], dt=dt)
