"""
Dissipation time and small-ball entry for independent pairs
"""

import math

import numpy as np
from loguru import logger

from ..config import SIGMA_MARGIN
from ..utils.errors import ParameterError
from .schemas import Ensemble, SmallBallReport


def dissipation_time(R0: float, C_prime_1: float, alpha: float) -> float:
    """theta_1(R0) = (2 / alpha) ln(R0 / C'_1), zero when R0 <= C'_1"""
    if alpha <= 0:
        raise ParameterError("dissipation time needs alpha > 0")
    if C_prime_1 <= 0 or R0 <= C_prime_1:
        return 0.0
    return 2.0 / alpha * math.log(R0 / C_prime_1)


def smallball_frequency(first: Ensemble, second: Ensemble, R1: float, C_prime_1: float, R0: float,
                        alpha: float) -> SmallBallReport:
    """
    Empirical P(H(u1(t)) + H(u2(t)) <= R1) along independent pairs

    Also checks P(H1 + H2 >= 4 C'_1) <= 1/2 (+ 3 sigma) at the first grid time
    after theta_1 and requires the small-ball frequency nearest 2 theta_1 (or at
    the horizon when 2 theta_1 lies beyond it) to be positive with a 3-sigma margin.

    Args:
        first, second: Row-aligned ensembles of the two members of each pair
        R1: Small-ball radius (may be inf)
        C_prime_1: Plateau constant C'_1
        R0: Bound on H(u0^1) + H(u0^2)
        alpha: Damping rate

    Returns:
        SmallBallReport
    """
    if first.H.shape != second.H.shape:
        raise ParameterError("pair ensembles must be row-aligned on a common grid")
    warnings = []
    total = first.H + second.H
    if np.any(total[:, 0] > R0 * (1 + 1e-12)):
        warnings.append("some initial pairs exceed the return-ball radius R0")

    n = total.shape[0]
    inside = total <= R1
    frequency = inside.mean(axis=0)
    stderr = np.sqrt(frequency * (1 - frequency) / n)

    theta1 = dissipation_time(R0, C_prime_1, alpha)
    times = first.times
    dissipation_frequency, dissipation_stderr, dissipation_ok = None, None, True
    after = np.nonzero(times >= theta1)[0]
    if after.size:
        j = after[0]
        dissipation_frequency = float(np.mean(total[:, j] >= 4 * C_prime_1))
        dissipation_stderr = float(math.sqrt(dissipation_frequency * (1 - dissipation_frequency) / n))
        dissipation_ok = dissipation_frequency <= 0.5 + SIGMA_MARGIN * dissipation_stderr
    else:
        warnings.append(f"horizon {times[-1]:.3g} ends before theta_1={theta1:.3g}")

    entry_index = int(np.argmin(np.abs(times - 2 * theta1)))
    entry_ok = bool(frequency[entry_index] - SIGMA_MARGIN * stderr[entry_index] > 0 or frequency[entry_index] == 1.0)
    passed = bool(dissipation_ok and entry_ok)
    for message in warnings:
        logger.warning(message, R0=R0, R1=R1)
    logger.info("Small-ball frequency", R1=R1, theta1=theta1, entry=float(frequency[entry_index]), passed=passed)
    return SmallBallReport(
        R1=R1, times=times.tolist(), frequency=frequency.tolist(), stderr=stderr.tolist(), theta1_hat=theta1,
        dissipation_level=4 * C_prime_1, dissipation_frequency=dissipation_frequency,
        dissipation_stderr=dissipation_stderr, entry_time=float(times[entry_index]), passed=passed,
        warnings=warnings,
    )
