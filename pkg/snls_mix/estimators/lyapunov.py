"""
Monte Carlo checks of the Lyapunov structure: Ito drift, moment decay,
tails of the accumulated energy, stopping-time bound and the invariant moment
"""

from typing import Literal, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger
from scipy import stats
from scipy.integrate import cumulative_trapezoid

from ..config import MIN_SAMPLES_PER_BIN, MIN_TAIL_EXCEEDANCES, SIGMA_MARGIN
from ..energy import EnergyParams, power
from ..utils.errors import ParameterError
from .schemas import (
    BinStat,
    DriftReport,
    Ensemble,
    InvariantMomentReport,
    MomentDecayReport,
    StoppingReport,
    TailReport,
)

MAX_BINS = 10


def _mean_and_stderr(values: np.ndarray, axis: int = 0):
    n = values.shape[axis]
    mean = np.mean(values, axis=axis)
    stderr = np.std(values, axis=axis, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(mean)
    return mean, stderr


def check_ito_drift(ensemble: Ensemble, k: float, params: EnergyParams,
                    functional: Literal["energy", "mass_power"] = "energy") -> DriftReport:
    """
    Binned estimate of E[f(u(t+d)) - f(u(t)) | u(t)] + c f(u(t)) d

    For functional="energy", f = H^k and c = alpha k / 2; for "mass_power",
    f = |u|_2^{2 + 4s/(2-s)} and c = alpha (3/2 + 4s/(2-s)). Bins are equal-count
    in H(u(t)). C_hat is the largest lower 3-sigma bound of the per-bin rate
    (floored at 0); a significantly positive rate in the top-H bin means
    dissipation does not dominate and is flagged as a systematic violation.

    Raises:
        ParameterError: If mass_power is requested with sigma >= 2
    """
    d = ensemble.record_dt
    if d <= 0:
        raise ParameterError("drift check needs at least two recorded times")
    if functional == "energy":
        f = power(ensemble.H, k)
        rate = params.alpha * k / 2.0
    elif functional == "mass_power":
        if params.sigma >= 2:
            raise ParameterError(f"mass power exponent is singular for sigma={params.sigma}")
        f = ensemble.mass ** (params.mass_exponent / 2.0)
        rate = params.alpha * (1.5 + 4 * params.sigma / (2 - params.sigma))
    else:
        raise ParameterError(f"unknown functional '{functional}'")

    frame = pd.DataFrame({
        "H": ensemble.H[:, :-1].ravel(),
        "rate": ((f[:, 1:] - f[:, :-1] + rate * f[:, :-1] * d) / d).ravel(),
    })
    warnings = []
    n_bins = min(MAX_BINS, len(frame) // MIN_SAMPLES_PER_BIN)
    if n_bins < 1:
        warnings.append(f"only {len(frame)} samples, fewer than {MIN_SAMPLES_PER_BIN} per bin")
        n_bins = 1
    frame["bin"] = pd.qcut(frame["H"].rank(method="first"), q=n_bins, labels=False) if n_bins > 1 else 0

    grouped = frame.groupby("bin").agg(
        H_low=("H", "min"), H_high=("H", "max"), n=("rate", "size"), rate=("rate", "mean"), sd=("rate", "std"),
    )
    grouped["stderr"] = (grouped["sd"].fillna(0.0) / np.sqrt(grouped["n"])).astype(float)
    bins = [
        BinStat(H_low=row.H_low, H_high=row.H_high, n=int(row.n), rate=row.rate, stderr=row.stderr)
        for row in grouped.itertuples()
    ]
    lower = grouped["rate"] - SIGMA_MARGIN * grouped["stderr"]
    C_hat = max(0.0, float(lower.max()))
    systematic = bool(n_bins > 1 and lower.iloc[-1] > 0)
    if systematic:
        warnings.append("drift stays positive in the highest-energy bin")
    for message in warnings:
        logger.warning(message, functional=functional, k=k)
    return DriftReport(functional=functional, k=k, bins=bins, C_hat=C_hat, systematic_violation=systematic,
                       passed=not systematic, warnings=warnings)


def estimate_moment_decay(ensemble: Ensemble, k: float, params: EnergyParams) -> MomentDecayReport:
    """
    E H^k(u(t)) against exp(-alpha k t / 2) H^k(u0) + C'_k / 2

    C'_k is twice the mean of the curve over the last quarter of the horizon.
    """
    values = power(ensemble.H, k)
    mean, stderr = _mean_and_stderr(values)
    tail = max(1, ensemble.times.size // 4)
    C_prime = 2.0 * float(np.mean(mean[-tail:]))
    initial = float(np.mean(values[:, 0]))
    envelope = np.exp(-params.alpha * k * ensemble.times / 2.0) * initial + C_prime / 2.0
    bound = envelope + SIGMA_MARGIN * stderr
    passed = bool(np.all(mean <= bound * (1 + 1e-12) + 1e-300))
    logger.info("Moment decay", k=k, C_prime=C_prime, passed=passed)
    return MomentDecayReport(k=k, times=ensemble.times.tolist(), mean=mean.tolist(), stderr=stderr.tolist(),
                             bound=bound.tolist(), initial=initial, C_prime_hat=C_prime, passed=passed)


def accumulated_energy(ensemble: Ensemble, k: float, params: EnergyParams) -> np.ndarray:
    """E_{u,k}(t) = H^k(u(t)) + (alpha k / 2) int_0^t H^k on the recorded grid"""
    values = power(ensemble.H, k)
    return values + 0.5 * params.alpha * k * cumulative_trapezoid(values, ensemble.times, axis=1, initial=0.0)


def tail_probability(ensemble: Ensemble, k: float, params: EnergyParams, rhos: Sequence[float],
                     C_prime: Optional[float] = None, p_min: float = 1.0) -> TailReport:
    """
    P(sup_t (E_{u,k}(t) - C'_k t) >= H^k(u0) + rho (H^{2k}(u0) + T)) as a function of rho

    Args:
        ensemble: Ensemble from a common initial state
        k: Power
        params: Energy parameters
        rhos: Increasing thresholds
        C_prime: C'_k (estimated from the ensemble plateau when omitted)
        p_min: Required tail decay exponent

    Returns:
        TailReport; inconclusive when the largest rho has fewer than 10 exceedances
    """
    if C_prime is None:
        C_prime = estimate_moment_decay(ensemble, k, params).C_prime_hat
    rhos = np.asarray(sorted(rhos), dtype=np.float64)
    acc = accumulated_energy(ensemble, k, params)
    h0 = power(ensemble.H[:, 0], k)
    horizon = float(ensemble.times[-1])
    excess = np.max(acc - C_prime * ensemble.times, axis=1) - h0
    scaled = excess / (power(ensemble.H[:, 0], 2 * k) + horizon)

    counts = np.array([int(np.count_nonzero(scaled >= rho)) for rho in rhos])
    prob = counts / ensemble.n
    stderr = np.sqrt(prob * (1 - prob) / ensemble.n)
    inconclusive = bool(counts[-1] < MIN_TAIL_EXCEEDANCES)

    slope, passed = None, None
    usable = (prob > 0) & (rhos > 0)
    if np.count_nonzero(usable) >= 2:
        slope = float(stats.linregress(np.log(rhos[usable]), np.log(prob[usable])).slope)
        passed = bool(slope <= -p_min)
    if inconclusive:
        logger.warning("Tail estimate inconclusive", exceedances=int(counts[-1]), rho=float(rhos[-1]))
    return TailReport(k=k, rhos=rhos.tolist(), probability=prob.tolist(), stderr=stderr.tolist(),
                      exceedances=counts.tolist(), slope=slope, p_min=p_min, inconclusive=inconclusive,
                      passed=passed)


def check_stopping_bound(ensemble: Ensemble, k: float, C_prime: float, level: float) -> StoppingReport:
    """
    E H^k(u(tau)) <= H^k(u0) + C'_k E tau for tau = first grid time with H >= level, capped at the horizon
    """
    reached = ensemble.H >= level
    index = np.where(reached.any(axis=1), reached.argmax(axis=1), ensemble.times.size - 1)
    tau = ensemble.times[index]
    stopped = power(ensemble.H[np.arange(ensemble.n), index], k)
    lhs, lhs_se = _mean_and_stderr(stopped)
    rhs = float(np.mean(power(ensemble.H[:, 0], k))) + C_prime * float(np.mean(tau))
    return StoppingReport(k=k, level=level, lhs=float(lhs), lhs_stderr=float(lhs_se), rhs=rhs,
                          mean_tau=float(np.mean(tau)), passed=bool(lhs - SIGMA_MARGIN * lhs_se <= rhs))


def invariant_moment(ensemble: Ensemble, burn_in: float, n_batches: int = 10) -> InvariantMomentReport:
    """
    Long-run mean of H after burn_in with a batch-means standard error

    Each trajectory is a batch; a single trajectory is cut into n_batches blocks.
    """
    window = ensemble.H[:, ensemble.times >= burn_in]
    if window.shape[1] == 0:
        raise ParameterError(f"burn_in={burn_in} leaves no recorded times")
    if ensemble.n > 1:
        batches = window.mean(axis=1)
    else:
        blocks = np.array_split(window[0], min(n_batches, window.shape[1]))
        batches = np.array([block.mean() for block in blocks])
    mean, stderr = _mean_and_stderr(batches)
    return InvariantMomentReport(burn_in=burn_in, mean=float(mean), stderr=float(stderr), n_batches=int(batches.size))
