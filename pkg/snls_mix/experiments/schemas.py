"""
Pydantic schemas for experiment files
"""

from pathlib import Path
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..config import DEFAULT_CORPUS_SIZE, DEFAULT_DT, DEFAULT_FEEDBACK_GAIN, DEFAULT_K0, DEFAULT_MODES, DEFAULT_SAFETY
from ..utils.errors import SnlsMixError

Calibrated = Union[float, Literal["calibrate"]]


class ConfigError(SnlsMixError):
    """Raised when an experiment file fails to load or validate; carries the failing key"""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class EquationBlock(_Block):
    sigma: float = Field(..., ge=0)
    lam: Literal[1, -1] = Field(..., alias="lambda")
    alpha: float = Field(..., ge=0)

    @model_validator(mode="after")
    def _check_range(self) -> "EquationBlock":
        if self.lam == 1 and self.sigma >= 2:
            raise ValueError(f"focusing case requires sigma < 2, got {self.sigma}")
        return self


class DiscretizationBlock(_Block):
    M: int = Field(DEFAULT_MODES, ge=1)
    dt: float = Field(DEFAULT_DT, gt=0)
    T_horizon: float = Field(..., gt=0)


class NoiseBlock(_Block):
    """Explicit b, or the power rule b_n = scale n^-exponent for n <= cutoff"""
    n_star: int = Field(..., ge=1)
    b: Optional[List[float]] = None
    scale: float = Field(1.0, ge=0)
    exponent: float = 4.0
    cutoff: Optional[int] = Field(None, ge=1)

    @field_validator("b")
    @classmethod
    def _check_b(cls, value: Optional[List[float]]) -> Optional[List[float]]:
        if value is not None and any(x < 0 for x in value):
            raise ValueError("b entries must be nonnegative")
        return value


class ConstantsBlock(_Block):
    G: Calibrated = "calibrate"
    G1: Calibrated = "calibrate"
    Lambda: Calibrated = 1.0
    safety: float = Field(DEFAULT_SAFETY, ge=1)
    corpus_size: int = Field(DEFAULT_CORPUS_SIZE, ge=1000)
    powers: List[float] = Field(default_factory=lambda: [1.0, 2.0], description="k for which C'_k is estimated")

    @field_validator("G", "G1")
    @classmethod
    def _check_value(cls, value: Calibrated) -> Calibrated:
        if value != "calibrate" and value < 0:
            raise ValueError("constants must be nonnegative or 'calibrate'")
        return value

    @field_validator("Lambda")
    @classmethod
    def _check_rate(cls, value: Calibrated) -> Calibrated:
        if value != "calibrate" and value <= 0:
            raise ValueError("Lambda must be positive or 'calibrate'")
        return value


class CouplingBlock(_Block):
    T: float = Field(..., gt=0)
    d0: float = Field(0.5, gt=0)
    R0: float = Field(..., gt=0)
    kappa: float = Field(1.0, ge=0)
    B: float = Field(1.0, ge=0)
    q: float = Field(1.0, gt=0)
    N_star: Optional[int] = Field(None, ge=1, description="Defaults to noise.n_star")
    gain: float = Field(DEFAULT_FEEDBACK_GAIN, ge=0)
    k0: float = Field(DEFAULT_K0, gt=0)


class InitialBlock(_Block):
    """
    Initial states u0 = a * phi with phi proportional to sum_{n in modes} e_n / n
    and unit L2 norm; a is set directly or solved from a target H
    """
    modes: List[int] = Field(default_factory=lambda: [1])
    amplitude_1: float = 0.0
    amplitude_2: float = 0.0
    H_1: Optional[float] = Field(None, ge=0)
    H_2: Optional[float] = Field(None, ge=0)
    fp_perturbation: float = Field(0.5, ge=0, description="Amplitude on mode N_* + 1 separating the Foias-Prodi pair")

    @field_validator("modes")
    @classmethod
    def _check_modes(cls, value: List[int]) -> List[int]:
        if not value or any(n < 1 for n in value):
            raise ValueError("modes must be a non-empty list of positive integers")
        return value


class RunBlock(_Block):
    seed: int = Field(0, ge=0, lt=2 ** 64)
    n_trajectories: int = Field(200, ge=2)
    n_cycles: int = Field(50, ge=1)
    record_every: int = Field(10, ge=1)
    threads: int = Field(1, ge=1)
    out: Optional[Path] = None
    tail_rhos: List[float] = Field(default_factory=lambda: [0.1, 0.2, 0.5, 1.0, 2.0])
    R1: Optional[float] = Field(None, gt=0, description="Small-ball radius, defaults to coupling.d0")
    mix_factor: float = Field(5.0, gt=1)
    mix_cycles: int = Field(50, ge=1)


class ExperimentConfig(_Block):
    """A complete experiment: equation, discretization, noise, constants, coupling, initial states and run"""
    scenario: Optional[str] = None
    equation: EquationBlock
    discretization: DiscretizationBlock
    noise: NoiseBlock
    constants: ConstantsBlock = Field(default_factory=ConstantsBlock)
    coupling: CouplingBlock
    initial: InitialBlock = Field(default_factory=InitialBlock)
    run: RunBlock = Field(default_factory=RunBlock)

    @model_validator(mode="after")
    def _check_consistency(self) -> "ExperimentConfig":
        M = self.discretization.M
        if self.noise.n_star > M:
            raise ValueError(f"noise.n_star={self.noise.n_star} exceeds M={M}")
        if self.noise.b is not None and len(self.noise.b) != M:
            raise ValueError(f"noise.b has {len(self.noise.b)} entries but M={M}")
        if self.coupling.N_star is not None and self.coupling.N_star > M:
            raise ValueError(f"coupling.N_star={self.coupling.N_star} exceeds M={M}")
        if self.coupling.R0 < self.coupling.d0:
            raise ValueError("coupling.R0 must be at least coupling.d0")
        if max(self.initial.modes) > M:
            raise ValueError(f"initial.modes reach beyond M={M}")
        return self
