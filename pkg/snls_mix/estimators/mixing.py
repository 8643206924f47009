"""
Mixing curves over a dictionary of bounded Lipschitz test functionals and
the fitted polynomial decay exponent
"""

from typing import Callable, Dict, Optional, Tuple

import numpy as np
from loguru import logger
from scipy import stats

from ..config import DEFAULT_THREADS, MIN_FIT_POINTS, SIGMA_MARGIN
from ..integrator import SimConfig
from ..spectral import SpectralField
from ..utils.errors import ParameterError
from .ensemble import DEFAULT_LOW_MODES, _restrict, simulate_ensemble
from .schemas import Ensemble, MixingCurve, RateFit

TestFunctional = Callable[[Ensemble], np.ndarray]

# relative slope change between the two halves of the fit window flagged as curvature
CURVATURE_TOLERANCE = 0.05


def _disk(z: np.ndarray) -> np.ndarray:
    """Projection of complex values onto the closed unit disk"""
    size = np.abs(z)
    return np.where(size > 1.0, z / np.maximum(size, 1.0), z)


def default_dictionary(n_low: int = DEFAULT_LOW_MODES, H_scale: float = 10.0,
                       mass_scale: float = 1.0) -> Dict[str, TestFunctional]:
    """
    Test functionals with sup norm plus Lipschitz constant at most 1

    Clipped real and imaginary parts of the leading coefficients, the same
    coordinates projected onto the unit disk (amplitude-weighted cos/sin of
    the phase), clipped H and clipped squared mass. Each is scaled by 1/2.
    """
    if H_scale <= 0 or mass_scale <= 0:
        raise ParameterError("dictionary scales must be positive")
    dictionary: Dict[str, TestFunctional] = {}
    for n in range(n_low):
        dictionary[f"re_u{n + 1}"] = lambda e, n=n: 0.5 * np.clip(e.low[..., n].real, -1.0, 1.0)
        dictionary[f"im_u{n + 1}"] = lambda e, n=n: 0.5 * np.clip(e.low[..., n].imag, -1.0, 1.0)
        dictionary[f"cos_u{n + 1}"] = lambda e, n=n: 0.5 * _disk(e.low[..., n]).real
        dictionary[f"sin_u{n + 1}"] = lambda e, n=n: 0.5 * _disk(e.low[..., n]).imag
    dictionary["H"] = lambda e: 0.5 * np.clip(e.H / H_scale, 0.0, 1.0)
    dictionary["mass"] = lambda e: 0.5 * np.clip(e.mass / mass_scale, 0.0, 1.0)
    return dictionary


def _evaluate(ensemble: Ensemble, dictionary: Dict[str, TestFunctional]) -> np.ndarray:
    """(n_functionals, n, n_times) values"""
    return np.stack([np.asarray(phi(ensemble), dtype=float) for phi in dictionary.values()])


def mixing_curve_from_ensembles(first: Ensemble, second: Ensemble, dictionary: Optional[Dict[str, TestFunctional]] = None,
                                paired: bool = False) -> MixingCurve:
    """
    Gap |E phi(u1(t)) - E phi(u2(t))| per functional

    With paired=True the rows share their noise and the standard error comes
    from the row-wise differences; otherwise the ensembles are independent.
    """
    if not np.allclose(first.times, second.times):
        raise ParameterError("ensembles must share their time grid")
    dictionary = default_dictionary(min(first.low.shape[-1], second.low.shape[-1])) if dictionary is None else dictionary
    if paired:
        common = sorted(set(first.stream_ids) & set(second.stream_ids))
        first, second = _restrict(first, common), _restrict(second, common)
    one, two = _evaluate(first, dictionary), _evaluate(second, dictionary)
    gaps = np.abs(one.mean(axis=1) - two.mean(axis=1)).T
    if paired:
        n = first.n
        diff = one - two
        stderr = (diff.std(axis=1, ddof=1) / np.sqrt(n)).T if n > 1 else np.zeros_like(gaps)
    else:
        n = min(first.n, second.n)
        var1 = one.var(axis=1, ddof=1) / first.n if first.n > 1 else 0.0
        var2 = two.var(axis=1, ddof=1) / second.n if second.n > 1 else 0.0
        stderr = np.sqrt(var1 + var2).T * np.ones_like(gaps)
    return MixingCurve(times=np.array(first.times), names=list(dictionary), gaps=gaps, stderr=stderr, n=n)


def mixing_curve(u0_1: SpectralField, u0_2: SpectralField, sim: SimConfig, n: int, seed: int,
                 dictionary: Optional[Dict[str, TestFunctional]] = None, threads: int = DEFAULT_THREADS,
                 record_every: int = 1, common_noise: bool = True) -> MixingCurve:
    """
    Mixing curve of two initial states over the horizon sim.T

    Args:
        u0_1, u0_2: Initial states
        sim: Simulation config
        n: Trajectories per initial state
        seed: Experiment seed
        dictionary: Test functionals (default_dictionary when omitted)
        threads: Worker threads
        record_every: Keep every k-th step
        common_noise: Drive row i of both ensembles by the same stream

    Returns:
        MixingCurve
    """
    first = simulate_ensemble(u0_1, sim, n, seed, role=0, threads=threads, record_every=record_every)
    second = simulate_ensemble(u0_2, sim, n, seed, role=0 if common_noise else 1, threads=threads,
                               record_every=record_every)
    curve = mixing_curve_from_ensembles(first, second, dictionary, paired=common_noise)
    logger.info("Mixing curve", n=curve.n, initial_gap=float(curve.aggregate[0]), final_gap=float(curve.aggregate[-1]))
    return curve


def gap_reduction(curve: MixingCurve, time: float, factor: float) -> Tuple[float, bool]:
    """
    Ratio of the aggregate gap at t = 0 to the gap at the grid time nearest `time`

    Passes when gap(t) + 3 stderr(t) <= gap(0) / factor.
    """
    j = int(np.argmin(np.abs(curve.times - time)))
    start, gap, se = curve.aggregate[0], curve.aggregate[j], curve.aggregate_stderr[j]
    ratio = float(start / gap) if gap > 0 else float("inf")
    return ratio, bool(gap + SIGMA_MARGIN * se <= start / factor)


def _slope(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    fit = stats.linregress(x, y)
    return float(fit.slope), float(fit.stderr)


def fit_rate(curve: MixingCurve, column: Optional[str] = None) -> RateFit:
    """
    Least-squares exponent q in gap ~ (1 + t)^{-q}

    Uses the aggregate gap (or one named functional) at the times where it
    exceeds 3 standard errors. The super-polynomial flag is raised when the
    log-log slope on the second half of the window is steeper than on the first.
    """
    if column is None:
        gaps, stderr = curve.aggregate, curve.aggregate_stderr
    else:
        j = curve.names.index(column)
        gaps, stderr = curve.gaps[:, j], curve.stderr[:, j]
    mask = (gaps > 0) & (gaps > SIGMA_MARGIN * stderr) & np.isfinite(gaps)
    n_points = int(np.count_nonzero(mask))
    if n_points < MIN_FIT_POINTS:
        logger.warning("Too few points above the noise floor for a rate fit", n_points=n_points)
        return RateFit(n_points=n_points, inconclusive=True)

    x = np.log1p(curve.times[mask])
    y = np.log(gaps[mask])
    slope, slope_se = _slope(x, y)
    q_hat = -slope
    half_width = float(stats.t.ppf(0.975, n_points - 2)) * slope_se

    half = n_points // 2
    super_polynomial = False
    if half >= 3 and n_points - half >= 3:
        early, early_se = _slope(x[:half], y[:half])
        late, late_se = _slope(x[half:], y[half:])
        margin = max(SIGMA_MARGIN * float(np.hypot(early_se, late_se)), CURVATURE_TOLERANCE * abs(q_hat))
        super_polynomial = bool(late < early - margin)

    fit = RateFit(q_hat=q_hat, ci_low=q_hat - half_width, ci_high=q_hat + half_width, n_points=n_points,
                  inconclusive=False, super_polynomial=super_polynomial, positive=bool(q_hat - half_width > 0))
    logger.info("Fitted mixing exponent", q_hat=q_hat, ci=(fit.ci_low, fit.ci_high), super_polynomial=super_polynomial)
    return fit
