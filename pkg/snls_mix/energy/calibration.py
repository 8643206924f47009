"""
Randomized calibration of the constants G and G1

Both constants only need to exist; here they are estimated as the largest
ratio seen on a randomized corpus of low-mode fields, times a safety factor,
and then re-checked on a fresh corpus drawn from the same stream.
"""

from typing import Optional

import numpy as np
from loguru import logger

from ..config import CALIBRATION_MODES, CORPUS_ACTIVE_MODES, DEFAULT_CORPUS_SIZE, DEFAULT_SAFETY, GAUSS_LEGENDRE_NODES
from ..spectral import get_basis
from ..utils.errors import ParameterError
from .schemas import EnergyParams
from .service import interaction_values, energy_values, power, quadrature_grid_size

MIN_CORPUS_SIZE = 1000
# L2 norms of corpus fields are log-uniform on this range
CORPUS_NORM_RANGE = (1e-1, 1e2)


def random_corpus(rng: np.random.Generator, size: int, modes: int = CALIBRATION_MODES,
                  active: int = CORPUS_ACTIVE_MODES) -> np.ndarray:
    """
    Random fields supported on the first `active` modes

    Each field gets a random spectral slope n^-s, s ~ U[0, 2], and an L2 norm
    drawn log-uniformly so that every amplitude regime of the ratios is visited.

    Returns:
        (size, modes) complex coefficient array
    """
    active = min(active, modes)
    n = np.arange(1, active + 1)
    slopes = rng.uniform(0.0, 2.0, size=(size, 1))
    raw = (rng.standard_normal((size, active)) + 1j * rng.standard_normal((size, active))) * n ** (-slopes)
    norms = np.exp(rng.uniform(*np.log(CORPUS_NORM_RANGE), size=(size, 1)))
    raw = raw / np.linalg.norm(raw, axis=1, keepdims=True) * norms
    corpus = np.zeros((size, modes), dtype=np.complex128)
    corpus[:, :active] = raw
    return corpus


def _check_sigma(sigma: float) -> None:
    if sigma < 0 or sigma >= 2:
        raise ParameterError(f"focusing calibration needs sigma in [0, 2), got {sigma}")


def _check_sizes(corpus_size: int, safety: float) -> None:
    if corpus_size < MIN_CORPUS_SIZE:
        raise ParameterError(f"corpus_size must be at least {MIN_CORPUS_SIZE}, got {corpus_size}")
    if safety < 1:
        raise ParameterError(f"safety factor must be >= 1, got {safety}")


def _g_ratios(corpus: np.ndarray, sigma: float) -> np.ndarray:
    """(|u|_p^p - |grad u|^2 / p) * 2 / |u|_2^e with p = 2 sigma + 2 and e the mass exponent"""
    M = corpus.shape[-1]
    p = 2 * sigma + 2
    basis = get_basis(M, quadrature_grid_size(M, sigma))
    exponent = 2.0 + 4.0 * sigma / (2.0 - sigma)
    numerator = basis.power_integral(corpus, p) - basis.gradient_sq(corpus) / p
    return 2.0 * numerator / basis.mass_sq(corpus) ** (exponent / 2.0)


def verify_G(sigma: float, G: float, corpus: np.ndarray) -> int:
    """Number of corpus fields violating |u|_p^p <= |grad u|^2 / p + (G/2) |u|_2^e"""
    return int(np.count_nonzero(_g_ratios(corpus, sigma) > G * (1 + 1e-12)))


def calibrate_G(sigma: float, corpus_size: int = DEFAULT_CORPUS_SIZE, safety: float = DEFAULT_SAFETY,
                rng: Optional[np.random.Generator] = None, modes: int = CALIBRATION_MODES) -> float:
    """
    Calibrate the focusing modified-energy constant G

    Args:
        sigma: Nonlinearity exponent, in [0, 2)
        corpus_size: Number of random fields, at least 1000
        safety: Multiplier applied to the corpus maximum
        rng: Random stream (a fresh default generator when omitted)
        modes: Galerkin size of the corpus fields

    Returns:
        safety * max(0, max corpus ratio)

    Raises:
        ParameterError: If sigma >= 2, the corpus is too small or safety < 1
    """
    _check_sigma(sigma)
    _check_sizes(corpus_size, safety)
    rng = np.random.default_rng() if rng is None else rng

    G = safety * max(0.0, float(np.max(_g_ratios(random_corpus(rng, corpus_size, modes), sigma))))
    violations = verify_G(sigma, G, random_corpus(rng, corpus_size, modes))
    if violations:
        logger.warning("calibrated G violated on the verification corpus", sigma=sigma, G=G, violations=violations)
    logger.info("Calibrated G", sigma=sigma, G=G, safety=safety)
    return G


def random_triples(rng: np.random.Generator, size: int, modes: int = CALIBRATION_MODES) -> np.ndarray:
    """(3, size, modes) array holding u1, u2 and r"""
    return np.stack([random_corpus(rng, size, modes) for _ in range(3)])


def _g1_ratios(triples: np.ndarray, sigma: float, G: float) -> np.ndarray:
    """(|grad r|^2 / 2 - J*) / (sum H^sigma(u_i) |r|^2), zero where J* already suffices"""
    u1, u2, r = triples
    params = EnergyParams(sigma=sigma, lam=1, alpha=1.0, G=G, G1=0.0)
    basis = get_basis(r.shape[-1])
    grad = basis.gradient_sq(r)
    j_star = grad - interaction_values(u1, u2, r, sigma, GAUSS_LEGENDRE_NODES)
    deficit = 0.5 * grad - j_star
    weight = (power(energy_values(u1, params), sigma) + power(energy_values(u2, params), sigma)) * basis.mass_sq(r)
    return np.divide(deficit, weight, out=np.zeros_like(deficit), where=(deficit > 0) & (weight > 0))


def verify_G1(sigma: float, G: float, G1: float, triples: np.ndarray) -> int:
    """Number of triples with J < |grad r|^2 / 2"""
    return int(np.count_nonzero(_g1_ratios(triples, sigma, G) > G1 * (1 + 1e-12)))


def calibrate_G1(sigma: float, corpus_size: int = DEFAULT_CORPUS_SIZE, safety: float = DEFAULT_SAFETY,
                 rng: Optional[np.random.Generator] = None, G: Optional[float] = None,
                 modes: int = CALIBRATION_MODES) -> float:
    """
    Calibrate G1 so that J >= |grad r|^2 / 2 in the focusing case

    G enters through H^sigma; when omitted it is calibrated first from the same stream.

    Returns:
        safety * max(0, max corpus ratio)
    """
    _check_sigma(sigma)
    _check_sizes(corpus_size, safety)
    rng = np.random.default_rng() if rng is None else rng
    if G is None:
        G = calibrate_G(sigma, corpus_size, safety, rng, modes)

    G1 = safety * float(np.max(_g1_ratios(random_triples(rng, corpus_size, modes), sigma, G)))
    violations = verify_G1(sigma, G, G1, random_triples(rng, corpus_size, modes))
    if violations:
        logger.warning("calibrated G1 violated on the verification corpus", sigma=sigma, G1=G1, violations=violations)
    logger.info("Calibrated G1", sigma=sigma, G=G, G1=G1, safety=safety)
    return G1


def gagliardo_nirenberg_ratios(corpus: np.ndarray, sigma: float) -> np.ndarray:
    """|u|_p^p / (||u||_1^sigma |u|_2^{sigma + 2}) with p = 2 sigma + 2 for each corpus field"""
    M = corpus.shape[-1]
    basis = get_basis(M, quadrature_grid_size(M, sigma))
    numerator = basis.power_integral(corpus, 2 * sigma + 2)
    denominator = basis.gradient_sq(corpus) ** (sigma / 2.0) * basis.mass_sq(corpus) ** ((sigma + 2) / 2.0)
    return np.divide(numerator, denominator, out=np.zeros_like(numerator), where=denominator > 0)


def gagliardo_nirenberg_constant(sigma: float, corpus_size: int = DEFAULT_CORPUS_SIZE,
                                 rng: Optional[np.random.Generator] = None,
                                 modes: int = CALIBRATION_MODES) -> float:
    """
    Empirical constant C in |u|_p^p <= C ||u||_1^sigma |u|_2^{sigma + 2}

    The largest ratio over a randomized corpus; recorded with the calibrated
    constants, never assumed.

    Raises:
        ParameterError: If sigma < 0 or the corpus is too small
    """
    if sigma < 0:
        raise ParameterError(f"sigma must be nonnegative, got {sigma}")
    _check_sizes(corpus_size, 1.0)
    rng = np.random.default_rng() if rng is None else rng
    C = float(np.max(gagliardo_nirenberg_ratios(random_corpus(rng, corpus_size, modes), sigma)))
    logger.info("Measured interpolation constant", sigma=sigma, C=C, corpus_size=corpus_size)
    return C
