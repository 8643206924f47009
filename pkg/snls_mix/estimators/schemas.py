"""
Pydantic schemas for ensembles, curves and verdict reports
"""

from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class Ensemble(BaseModel):
    """
    Per-trajectory summaries on a common time grid

    `low` keeps the first few complex coefficients so that test functionals
    can be evaluated without storing full states.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    times: np.ndarray = Field(..., description="(n_times,) common grid")
    stream_ids: List[int] = Field(..., description="Stream index of each kept trajectory")
    seed: int
    H: np.ndarray = Field(..., description="(n, n_times) modified energy")
    mass: np.ndarray = Field(..., description="(n, n_times) squared L2 norm")
    low: np.ndarray = Field(..., description="(n, n_times, n_low) leading coefficients")
    aborted: int = Field(0, ge=0, description="Trajectories lost to blow-up")

    @model_validator(mode="after")
    def _check_alignment(self) -> "Ensemble":
        n = len(self.stream_ids)
        if len(set(self.stream_ids)) != n:
            raise ValueError("stream ids must be pairwise distinct")
        for name in ("H", "mass"):
            if getattr(self, name).shape != (n, self.times.size):
                raise ValueError(f"{name} must be (n, n_times)")
        if self.low.shape[:2] != (n, self.times.size):
            raise ValueError("low must be (n, n_times, n_low)")
        return self

    @property
    def n(self) -> int:
        return len(self.stream_ids)

    @property
    def record_dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    @property
    def aborted_fraction(self) -> float:
        total = self.n + self.aborted
        return self.aborted / total if total else 0.0


class BinStat(BaseModel):
    H_low: float
    H_high: float
    n: int
    rate: float = Field(..., description="Mean of (f(t+d) - f(t) + c f(t) d) / d")
    stderr: float


class DriftReport(BaseModel):
    """Conditional Ito drift of H^k (or of the mass power) binned by H"""
    functional: str
    k: float
    bins: List[BinStat]
    C_hat: float = Field(..., ge=0)
    systematic_violation: bool
    passed: bool
    warnings: List[str] = Field(default_factory=list)


class MomentDecayReport(BaseModel):
    k: float
    times: List[float]
    mean: List[float]
    stderr: List[float]
    bound: List[float]
    initial: float = Field(..., description="H^k(u0)")
    C_prime_hat: float
    passed: bool


class TailReport(BaseModel):
    k: float
    rhos: List[float]
    probability: List[float]
    stderr: List[float]
    exceedances: List[int]
    slope: Optional[float] = None
    p_min: float
    inconclusive: bool
    passed: Optional[bool] = None


class StoppingReport(BaseModel):
    k: float
    level: float
    lhs: float = Field(..., description="E H^k(u(tau))")
    lhs_stderr: float
    rhs: float = Field(..., description="H^k(u0) + C'_k E tau")
    mean_tau: float
    passed: bool


class InvariantMomentReport(BaseModel):
    burn_in: float
    mean: float
    stderr: float
    n_batches: int


class SmallBallReport(BaseModel):
    R1: float
    times: List[float]
    frequency: List[float]
    stderr: List[float]
    theta1_hat: float
    dissipation_level: float = Field(..., description="4 C'_1")
    dissipation_frequency: Optional[float] = Field(None, description="P(H1 + H2 >= 4 C'_1) at t >= theta1")
    dissipation_stderr: Optional[float] = None
    entry_time: Optional[float] = Field(None, description="Grid time closest to 2 theta1 used for the entry check")
    passed: bool
    warnings: List[str] = Field(default_factory=list)


class ContractionReport(BaseModel):
    times: List[float]
    median: List[float]
    quantiles: Dict[str, List[float]]
    slope: Optional[float] = None
    slope_stderr: Optional[float] = None
    threshold: float
    ell_integral_quantiles: Dict[str, float] = Field(default_factory=dict)
    passed: bool


class FoiasProdiReport(BaseModel):
    N: int
    Lambda: float
    times: List[float]
    mean: List[float]
    stderr: List[float]
    initial: float = Field(..., description="Ensemble mean of J at time 0")
    max_ratio: float
    passed: bool


class MixingCurve(BaseModel):
    """Per-functional gaps |E phi(u1(t)) - E phi(u2(t))| with Monte Carlo errors"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    times: np.ndarray
    names: List[str]
    gaps: np.ndarray = Field(..., description="(n_times, n_functionals)")
    stderr: np.ndarray = Field(..., description="(n_times, n_functionals)")
    n: int

    @property
    def aggregate(self) -> np.ndarray:
        return np.max(self.gaps, axis=1)

    @property
    def aggregate_stderr(self) -> np.ndarray:
        index = np.argmax(self.gaps, axis=1)
        return self.stderr[np.arange(self.times.size), index]


class RateFit(BaseModel):
    q_hat: Optional[float] = None
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None
    n_points: int
    inconclusive: bool
    super_polynomial: bool = False
    positive: bool = Field(False, description="CI lies above zero")


class ConditionReport(BaseModel):
    """Empirical checks of the coupling conditions on cycle logs"""
    C0: Optional[float] = None
    C0_stderr: Optional[float] = None
    q: float
    envelope_violation_rate: Optional[float] = None
    durations: List[int] = Field(default_factory=list)
    decoupling_frequency: List[float] = Field(default_factory=list)
    decoupling_stderr: List[float] = Field(default_factory=list)
    decoupling_monotone: bool = True
    binding_attempts: int = 0
    binding_success: Optional[float] = None
    binding_stderr: Optional[float] = None
    binding_passed: Optional[bool] = None
    l0_violations: int = 0
    warnings: List[str] = Field(default_factory=list)


class MarginalReport(BaseModel):
    names: List[str]
    times: List[float]
    z_scores: List[List[float]]
    n_tests: int
    outliers: int
    allowed_outliers: int
    passed: bool
