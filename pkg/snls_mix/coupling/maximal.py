"""
Maximal coupling of two laws given by log-densities on a common reference measure
"""

from typing import Any, Callable

import numpy as np
from loguru import logger

from ..config import MAX_COUPLING_ATTEMPTS
from ..utils.errors import ParameterError, SnlsMixError
from .schemas import CoupledDraw, TvBound

LogDensity = Callable[[Any], float]
Sampler = Callable[[np.random.Generator], Any]


class ResidualSamplingError(SnlsMixError):
    """Raised when the residual rejection loop exceeds its attempt cap"""
    pass


def _log_uniform(rng: np.random.Generator) -> float:
    # log of a uniform on (0, 1]
    return float(np.log1p(-rng.random()))


def maximal_coupling(log_density1: LogDensity, log_density2: LogDensity, sampler1: Sampler, sampler2: Sampler,
                     rng: np.random.Generator, max_attempts: int = MAX_COUPLING_ATTEMPTS) -> CoupledDraw:
    """
    Gamma coupling of mu1 and mu2

    Draw z1 ~ mu1 and keep z2 = z1 with probability min(1, rho2(z1) / rho1(z1));
    otherwise draw z2 from the normalized residual (mu2 - mu1 ^ mu2) by
    rejection from mu2 with acceptance 1 - min(1, rho1 / rho2). Then
    P(z1 != z2) equals the total variation distance.

    Args:
        log_density1, log_density2: log rho_i on the common reference measure (may return -inf)
        sampler1, sampler2: Draw from mu1 and mu2
        rng: Random stream for draws and acceptance tests
        max_attempts: Residual rejection cap

    Returns:
        CoupledDraw(z1, z2, equal, attempts)

    Raises:
        ResidualSamplingError: If the residual loop exceeds max_attempts
    """
    z1 = sampler1(rng)
    if _log_uniform(rng) <= log_density2(z1) - log_density1(z1):
        return CoupledDraw(z1=z1, z2=z1, equal=True, attempts=0)

    for attempt in range(1, max_attempts + 1):
        y = sampler2(rng)
        if _log_uniform(rng) > log_density1(y) - log_density2(y):
            return CoupledDraw(z1=z1, z2=y, equal=False, attempts=attempt)

    logger.error("Residual sampling exhausted", max_attempts=max_attempts)
    raise ResidualSamplingError(f"residual sampling failed after {max_attempts} attempts")


def tv_upper_bound(log_density_ratio_samples) -> TvBound:
    """
    (1/2) sqrt(E_mu2[(dmu1/dmu2)^2] - 1), clamped to [0, 1]

    Args:
        log_density_ratio_samples: log(dmu1/dmu2) evaluated at draws from mu2

    Returns:
        TvBound with a delta-method standard error

    Raises:
        ParameterError: If the sample is empty
    """
    log_ratio = np.asarray(log_density_ratio_samples, dtype=np.float64).ravel()
    n = log_ratio.size
    if n == 0:
        raise ParameterError("tv_upper_bound needs at least one sample")
    with np.errstate(over="ignore"):
        squared = np.exp(2.0 * log_ratio)
    moment = float(np.mean(squared))
    moment_se = float(np.std(squared, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    excess = moment - 1.0
    if not np.isfinite(moment):
        return TvBound(value=1.0, stderr=0.0, n=n)
    value = min(1.0, 0.5 * np.sqrt(max(0.0, excess)))
    if excess > 0:
        stderr = moment_se / (4.0 * np.sqrt(excess))
    else:
        stderr = 0.5 * np.sqrt(moment_se)
    return TvBound(value=value, stderr=float(stderr), n=n)
