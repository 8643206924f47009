"""
Foias–Prodi contraction in the regime of equal low modes and shared high-mode noise
"""

import math
from typing import List

import numpy as np
from loguru import logger
from scipy import stats
from scipy.integrate import cumulative_trapezoid, trapezoid

from ..config import SIGMA_MARGIN
from ..energy import CalibrationError, EnergyParams, PairHistory, ell_values, j_values
from ..spectral import get_basis
from ..utils.errors import ParameterError
from .schemas import ContractionReport, FoiasProdiReport

# the decay rate alpha/4 is an upper-bound mechanism; slopes within this fraction of it pass
RATE_TOLERANCE = 0.5
QUANTILES = (0.25, 0.5, 0.75, 0.9)


def _stack(histories: List[PairHistory]):
    if not histories:
        raise ParameterError("need at least one pair history")
    times = histories[0].times
    for history in histories[1:]:
        if history.times.shape != times.shape or not np.allclose(history.times, times):
            raise ParameterError("pair histories must share a time grid")
    u1 = np.stack([h.u1 for h in histories])
    u2 = np.stack([h.u2 for h in histories])
    return times, u1, u2


def contraction_tail(histories: List[PairHistory], params: EnergyParams) -> ContractionReport:
    """
    Quantiles of ||r(t)||_1 and the slope of log median ||r(t)||_1 against t

    Passes when the slope is at most -alpha/4 (1 - 0.5) and negative with a 3-sigma
    margin; a pair with r = 0 throughout passes trivially. Also reports quantiles
    of int_0^T l(u1, u2) ||r||_1^2 dt.
    """
    times, u1, u2 = _stack(histories)
    r = u1 - u2
    norms = np.sqrt(get_basis(r.shape[-1]).gradient_sq(r))
    quantiles = {f"q{int(q * 100)}": np.quantile(norms, q, axis=0).tolist() for q in QUANTILES}
    median = np.median(norms, axis=0)
    threshold = -params.alpha / 4.0 * (1 - RATE_TOLERANCE)

    weighted = ell_values(u1, u2, params) * norms ** 2
    integrals = trapezoid(weighted, times, axis=1)
    ell_quantiles = {f"q{int(q * 100)}": float(np.quantile(integrals, q)) for q in QUANTILES}

    slope, slope_se = None, None
    positive = median > 0
    if np.count_nonzero(positive) >= 2:
        fit = stats.linregress(times[positive], np.log(median[positive]))
        slope, slope_se = float(fit.slope), float(fit.stderr)
        passed = bool(slope <= threshold and slope + SIGMA_MARGIN * slope_se < 0)
    else:
        passed = bool(np.all(median == 0))
    logger.info("Contraction tail", slope=slope, threshold=threshold, passed=passed)
    return ContractionReport(times=times.tolist(), median=median.tolist(), quantiles=quantiles, slope=slope,
                             slope_stderr=slope_se, threshold=threshold, ell_integral_quantiles=ell_quantiles,
                             passed=passed)


def _fp_components(histories: List[PairHistory], params: EnergyParams):
    """J along each pair and the running integral of l, shape (n, n_times) each"""
    times, u1, u2 = _stack(histories)
    j_path = j_values(u1, u2, u1 - u2, params)
    ell_integral = cumulative_trapezoid(ell_values(u1, u2, params), times, axis=1, initial=0.0)
    return times, j_path, ell_integral


def _fp_report(times: np.ndarray, j_path: np.ndarray, ell_integral: np.ndarray, N: int,
               params: EnergyParams) -> FoiasProdiReport:
    with np.errstate(over="ignore", invalid="ignore"):
        weight = np.exp(2 * params.alpha * (times - times[0]) - params.Lambda / N ** 0.25 * ell_integral)
        paths = np.where(weight == 0.0, 0.0, weight * j_path)
    n = paths.shape[0]
    mean = paths.mean(axis=0)
    stderr = paths.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(mean)
    initial = float(mean[0])
    allowance = initial + SIGMA_MARGIN * stderr
    passed = bool(np.all(mean <= allowance * (1 + 1e-12) + 1e-300))
    ratio = float(np.max(mean / initial)) if initial > 0 else (0.0 if np.all(mean == 0) else float("inf"))
    return FoiasProdiReport(N=N, Lambda=params.Lambda, times=times.tolist(), mean=mean.tolist(),
                            stderr=stderr.tolist(), initial=initial, max_ratio=ratio, passed=passed)


def fp_supermartingale(histories: List[PairHistory], N: int, params: EnergyParams) -> FoiasProdiReport:
    """
    Ensemble mean of J_FP^N(t) against the initial J with a 3-sigma allowance

    Passes when mean(t) <= J(0) + 3 stderr(t) at every time.
    """
    if N < 1:
        raise ParameterError(f"N must be >= 1, got {N}")
    return _fp_report(*_fp_components(histories, params), N, params)


def calibrate_lambda(histories: List[PairHistory], N: int, params: EnergyParams, safety: float = 2.0,
                     low: float = 1e-8, high: float = 1.0, iterations: int = 60) -> float:
    """
    Smallest Lambda passing fp_supermartingale, times safety

    J_FP^N decreases in Lambda, so the passing set is an interval [Lambda*, inf)
    located by bisection on a log scale.

    Raises:
        CalibrationError: If no Lambda up to 1e12 passes
    """
    components = _fp_components(histories, params)

    def passes(value: float) -> bool:
        return _fp_report(*components, N, params.model_copy(update={"Lambda": value})).passed

    if passes(low):
        return safety * low
    while not passes(high):
        high *= 10.0
        if high > 1e12:
            raise CalibrationError("no Lambda up to 1e12 makes J_FP a supermartingale on this ensemble")
    for _ in range(iterations):
        mid = math.sqrt(low * high)
        if passes(mid):
            high = mid
        else:
            low = mid
        if high / low < 1 + 1e-6:
            break
    logger.info("Calibrated Lambda", N=N, Lambda=safety * high, safety=safety)
    return safety * high
