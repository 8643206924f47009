"""
Experiment file loading and construction of the domain objects it describes
"""

import copy
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import ValidationError
from scipy.optimize import brentq

from ..coupling import CouplingConfig
from ..energy import EnergyParams, energy_values
from ..integrator import SimConfig
from ..noise import NoiseOperator, validate
from ..spectral import SpectralField
from .constants import SCENARIOS
from .schemas import ConfigError, ExperimentConfig


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config(path: Optional[Union[str, Path]] = None, scenario: Optional[str] = None,
                overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Load an experiment from a preset, a file and explicit overrides, in that order

    Raises:
        ConfigError: Unknown scenario, unreadable file or invalid value, naming the key
    """
    raw: Dict[str, Any] = {}
    if scenario is not None:
        if scenario not in SCENARIOS:
            raise ConfigError("scenario", f"unknown scenario '{scenario}', expected one of {sorted(SCENARIOS)}")
        raw = _merge(SCENARIOS[scenario], {"scenario": scenario})
    if path is not None:
        try:
            with open(path, "rb") as fh:
                raw = _merge(raw, tomllib.load(fh))
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("config", f"{path} is not valid: {exc}") from exc
    if overrides:
        raw = _merge(raw, overrides)
    if not raw:
        raise ConfigError("config", "neither a config file nor a scenario was given")

    try:
        cfg = ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        error = exc.errors()[0]
        key = ".".join(str(part) for part in error["loc"]) or "config"
        raise ConfigError(key, error["msg"]) from exc

    report = validate(build_noise(cfg))
    if not report.passed and np.any(build_noise(cfg).b_coeffs > 0):
        raise ConfigError("noise", f"b_n vanishes on forced modes {report.offending_modes}")
    logger.info("Loaded experiment", scenario=cfg.scenario, path=str(path) if path else None)
    return cfg


def resolved_dump(cfg: ExperimentConfig) -> Dict[str, Any]:
    """JSON-ready dump of the resolved config, as embedded in every artifact"""
    return cfg.model_dump(mode="json", by_alias=True)


def build_noise(cfg: ExperimentConfig) -> NoiseOperator:
    block = cfg.noise
    if block.b is not None:
        return NoiseOperator(b_coeffs=block.b, n_star=block.n_star)
    return NoiseOperator.from_power_law(cfg.discretization.M, block.n_star, block.scale, block.exponent, block.cutoff)


def build_params(cfg: ExperimentConfig, G: Optional[float] = None, G1: Optional[float] = None,
                 Lambda: Optional[float] = None) -> EnergyParams:
    """Equation parameters with explicit constants taking precedence over calibrated ones"""
    constants = cfg.constants

    def pick(value, fallback):
        return fallback if value == "calibrate" else value

    rate = pick(constants.Lambda, Lambda)
    return EnergyParams(
        sigma=cfg.equation.sigma, lam=cfg.equation.lam, alpha=cfg.equation.alpha,
        G=pick(constants.G, G), G1=pick(constants.G1, G1), Lambda=1.0 if rate is None else rate,
    )


def build_sim(cfg: ExperimentConfig, params: EnergyParams, T: Optional[float] = None) -> SimConfig:
    return SimConfig(M=cfg.discretization.M, dt=cfg.discretization.dt,
                     T=cfg.discretization.T_horizon if T is None else T, params=params, noise=build_noise(cfg))


def build_coupling(cfg: ExperimentConfig) -> CouplingConfig:
    block = cfg.coupling
    return CouplingConfig(T=block.T, d0=block.d0, R0=block.R0, kappa=block.kappa, B=block.B, q=block.q,
                          N_star=block.N_star or cfg.noise.n_star, gain=block.gain, k0=block.k0)


def _amplitude_for(shape: np.ndarray, target: float, params: EnergyParams) -> float:
    """Smallest a >= 0 with H(a * shape) = target"""
    if target == 0.0:
        return 0.0

    def gap(a: float) -> float:
        return float(energy_values(a * shape, params)) - target

    high = 1.0
    while gap(high) < 0:
        high *= 2.0
        if high > 1e8:
            raise ConfigError("initial", f"no amplitude reaches H={target}")
    return float(brentq(gap, 0.0, high, xtol=1e-12))


def initial_states(cfg: ExperimentConfig, params: EnergyParams) -> Tuple[SpectralField, SpectralField]:
    """The two initial states described by the [initial] block"""
    block = cfg.initial
    shape = np.zeros(cfg.discretization.M, dtype=np.complex128)
    for n in block.modes:
        shape[n - 1] = 1.0 / n
    shape /= np.linalg.norm(shape)
    a1 = block.amplitude_1 if block.H_1 is None else _amplitude_for(shape, block.H_1, params)
    a2 = block.amplitude_2 if block.H_2 is None else _amplitude_for(shape, block.H_2, params)
    return SpectralField(coeffs=a1 * shape), SpectralField(coeffs=a2 * shape)
