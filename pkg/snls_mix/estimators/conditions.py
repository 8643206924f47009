"""
Statistics of coupled cycle logs and the marginal check of coupled chains
"""

import math
from collections import defaultdict
from typing import Dict, List, Literal, Optional, Sequence

import numpy as np
from loguru import logger
from scipy import stats

from ..config import SIGMA_MARGIN
from ..coupling import CoupledChain, CouplingConfig, CycleRecord
from ..energy import EnergyParams
from ..utils.errors import ParameterError
from .ensemble import DEFAULT_LOW_MODES, summarize_states
from .mixing import TestFunctional, default_dictionary
from .schemas import ConditionReport, Ensemble, MarginalReport

BOOTSTRAP_RESAMPLES = 200
BOOTSTRAP_SEED = 20240
MIN_STRATUM = 10
# per-test probability of a two-sided 3-sigma excursion
THREE_SIGMA_TAIL = 0.0027


def _binomial(successes: int, n: int):
    p = successes / n
    return p, math.sqrt(p * (1 - p) / n)


def l0_violations(records: Sequence[CycleRecord]) -> int:
    """
    Cycles breaking the l0 bookkeeping

    l0 never exceeds the next cycle index, a kept epoch only continues a
    coupled Vb cycle, a new epoch starts at k + 1 only after Va, and each
    record starts where the previous one ended.
    """
    count = 0
    previous: Optional[CycleRecord] = None
    for record in records:
        after, before, k = record.l0_after, record.l0_before, record.k
        bad = after is not None and after > k + 1
        if after is not None and after == before:
            bad |= record.branch != "Vb"
        elif after is not None:
            bad |= not (after == k + 1 and record.branch == "Va")
        if previous is not None:
            bad |= previous.k + 1 != k or previous.l0_after != before
        count += bool(bad)
        previous = record
    return count


def coupling_condition_stats(logs: Sequence[Sequence[CycleRecord]], cfg: CouplingConfig,
                             C0: Optional[float] = None) -> ConditionReport:
    """
    Distance envelope, decoupling frequencies and binding success from cycle logs

    Args:
        logs: One cycle log per coupled chain
        cfg: Coupling config that produced the logs (T, q, R0)
        C0: Envelope constant; the empirical maximum of distance * (t - lT)^q when omitted

    Returns:
        ConditionReport
    """
    records = [r for log in logs for r in log]
    if not records:
        raise ParameterError("no cycle records")
    warnings: List[str] = []

    # distance envelope over cycles that end coupled with positive elapsed time
    scaled = np.array([r.distance * ((r.k + 1 - r.l0_after) * cfg.T) ** cfg.q
                       for r in records if r.l0_after is not None and r.l0_after <= r.k])
    C0_hat, C0_se, violation_rate = None, None, None
    if scaled.size:
        C0_hat = float(np.max(scaled)) if C0 is None else C0
        rng = np.random.default_rng(BOOTSTRAP_SEED)
        maxima = np.max(rng.choice(scaled, size=(BOOTSTRAP_RESAMPLES, scaled.size), replace=True), axis=1)
        C0_se = float(np.std(maxima, ddof=1))
        violation_rate = float(np.mean(scaled > C0_hat))
    else:
        warnings.append("no coupled cycles for the distance envelope")

    # decoupling frequency stratified by coupled duration k - l0
    strata: Dict[int, List[bool]] = defaultdict(list)
    for r in records:
        if r.coupled_duration is not None:
            strata[r.coupled_duration].append(r.l0_after is None)
    durations = sorted(strata)
    frequency, stderr = [], []
    for d in durations:
        p, se = _binomial(sum(strata[d]), len(strata[d]))
        frequency.append(p)
        stderr.append(se)
        if len(strata[d]) < MIN_STRATUM:
            warnings.append(f"coupled-duration stratum {d} holds only {len(strata[d])} cycles")
    if durations:
        missing = sorted(set(range(durations[-1] + 1)) - set(durations))
        if missing:
            warnings.append(f"empty coupled-duration strata {missing}")
    monotone = all(
        frequency[i + 1] <= frequency[i] + SIGMA_MARGIN * math.hypot(stderr[i], stderr[i + 1])
        for i in range(len(durations) - 1)
    )

    # binding success from the return ball
    bindings = [r.binding_success for r in records
                if r.branch == "Va" and r.binding_success is not None and r.H_k <= cfg.R0]
    binding, binding_se, binding_passed = None, None, None
    if bindings:
        binding, binding_se = _binomial(sum(bindings), len(bindings))
        binding_passed = bool(binding - SIGMA_MARGIN * binding_se > 0)
    else:
        warnings.append("no binding attempts from the return ball")

    violations = sum(l0_violations(log) for log in logs)
    for message in warnings:
        logger.warning(message)
    logger.info("Coupling condition statistics", cycles=len(records), C0=C0_hat, binding=binding,
                monotone=monotone, l0_violations=violations)
    return ConditionReport(
        C0=C0_hat, C0_stderr=C0_se, q=cfg.q, envelope_violation_rate=violation_rate, durations=durations,
        decoupling_frequency=frequency, decoupling_stderr=stderr, decoupling_monotone=monotone,
        binding_attempts=len(bindings), binding_success=binding, binding_stderr=binding_se,
        binding_passed=binding_passed, l0_violations=violations, warnings=warnings,
    )


def chain_ensemble(chains: Sequence[CoupledChain], member: Literal[1, 2], params: EnergyParams, T: float,
                   seed: int, n_low: int = DEFAULT_LOW_MODES) -> Ensemble:
    """Summaries of one member of each chain at the cycle boundaries"""
    if not chains:
        raise ParameterError("no chains")
    states = np.stack([chain.u1 if member == 1 else chain.u2 for chain in chains])
    H, mass, low = summarize_states(states, params, n_low)
    return Ensemble(times=np.arange(states.shape[1]) * T, stream_ids=list(range(len(chains))), seed=seed,
                    H=H, mass=mass, low=low)


def marginal_check(coupled: Ensemble, uncoupled: Ensemble,
                   dictionary: Optional[Dict[str, TestFunctional]] = None) -> MarginalReport:
    """
    z-scores of mean differences between coupled-chain marginals and plain simulation

    Both ensembles must be recorded on the same time grid. Tests where both
    samples are constant and equal are skipped; the allowed number of
    3-sigma outliers is the 99% binomial quantile for the number of tests.
    """
    if coupled.times.size != uncoupled.times.size or not np.allclose(coupled.times, uncoupled.times):
        raise ParameterError("coupled and uncoupled ensembles must share their time grid")
    n_low = min(coupled.low.shape[-1], uncoupled.low.shape[-1])
    dictionary = default_dictionary(n_low) if dictionary is None else dictionary
    names = list(dictionary)
    z = np.zeros((coupled.times.size, len(names)))
    n_tests, outliers = 0, 0
    for j, name in enumerate(names):
        a = np.asarray(dictionary[name](coupled), dtype=float)
        b = np.asarray(dictionary[name](uncoupled), dtype=float)
        diff = a.mean(axis=0) - b.mean(axis=0)
        se = np.sqrt(a.var(axis=0, ddof=1) / a.shape[0] + b.var(axis=0, ddof=1) / b.shape[0])
        for t in range(coupled.times.size):
            if se[t] == 0.0:
                if diff[t] == 0.0:
                    continue
                z[t, j] = math.copysign(math.inf, diff[t])
            else:
                z[t, j] = diff[t] / se[t]
            n_tests += 1
            outliers += bool(abs(z[t, j]) > SIGMA_MARGIN)
    allowed = int(stats.binom.ppf(0.99, n_tests, THREE_SIGMA_TAIL)) if n_tests else 0
    passed = outliers <= allowed
    logger.info("Marginal check", tests=n_tests, outliers=outliers, allowed=allowed, passed=passed)
    return MarginalReport(names=names, times=coupled.times.tolist(), z_scores=z.tolist(), n_tests=n_tests,
                          outliers=outliers, allowed_outliers=allowed, passed=passed)
