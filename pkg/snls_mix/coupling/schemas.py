"""
Pydantic schemas for the coupling construction
"""

from typing import Any, Dict, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config import DEFAULT_FEEDBACK_GAIN, DEFAULT_K0, LYAPUNOV_STRIDE, MAX_COUPLING_ATTEMPTS
from ..energy import LyapunovAccumulator
from ..spectral import SpectralField

Branch = Literal["V0", "Va", "Vb"]


class CouplingConfig(BaseModel):
    """Cycle length, smallness and return thresholds and the Lyapunov cap of (P_{l,k})"""
    model_config = ConfigDict(frozen=True)

    T: float = Field(..., gt=0, description="Cycle length")
    d0: float = Field(0.5, gt=0, description="Smallness threshold for H_l")
    R0: float = Field(..., gt=0, description="Return-ball radius for binding attempts")
    kappa: float = Field(1.0, ge=0, description="Slack constant in the Lyapunov cap")
    B: float = Field(1.0, ge=0, description="Linear growth rate in the Lyapunov cap")
    q: float = Field(1.0, gt=0, description="Target polynomial exponent")
    N_star: int = Field(..., ge=1, description="Forced low modes")
    gain: float = Field(DEFAULT_FEEDBACK_GAIN, ge=0, description="Feedback gain of the binding control")
    k0: float = Field(DEFAULT_K0, gt=0, description="Constant of the control norm bound")
    max_attempts: int = Field(MAX_COUPLING_ATTEMPTS, ge=1, description="Residual rejection cap")
    lyapunov_stride: int = Field(LYAPUNOV_STRIDE, ge=1, description="Steps between Lyapunov cap checks")

    @model_validator(mode="after")
    def _check_radii(self) -> "CouplingConfig":
        if self.R0 < self.d0:
            raise ValueError(f"R0={self.R0} must be at least d0={self.d0}")
        return self

    def lyapunov_cap(self, sigma: float, elapsed: float) -> float:
        """kappa + 1 + d0^{3 sigma + 1} + d0^{6 sigma + 2} + B (t - lT)"""
        return self.kappa + 1 + self.d0 ** (3 * sigma + 1) + self.d0 ** (6 * sigma + 2) + self.B * elapsed


class CouplingState(BaseModel):
    """
    Pair state at time kT

    l0 is None when no coupling epoch is in force (l0 = infinity).
    """
    model_config = ConfigDict(frozen=True)

    k: int = Field(0, ge=0, description="Cycle index")
    l0: Optional[int] = Field(None, ge=0)
    u1: SpectralField
    u2: SpectralField
    H_l: Optional[float] = Field(None, description="H(u1) + H(u2) at cycle l0")
    lyap1: Optional[LyapunovAccumulator] = None
    lyap2: Optional[LyapunovAccumulator] = None

    @model_validator(mode="after")
    def _check_l0(self) -> "CouplingState":
        if self.l0 is not None and self.l0 > self.k:
            raise ValueError(f"l0={self.l0} exceeds the cycle index k={self.k}")
        return self

    @property
    def coupled(self) -> bool:
        return self.l0 is not None and self.l0 <= self.k


class CoupledDraw(BaseModel):
    """Output of a maximal coupling draw"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    z1: Any
    z2: Any
    equal: bool
    attempts: int = Field(0, ge=0, description="Residual draws used")


class TvBound(BaseModel):
    """Chi-square upper bound on a total variation distance"""
    value: float = Field(..., ge=0, le=1)
    stderr: float = Field(..., ge=0)
    n: int


class ControlPath(BaseModel):
    """Control h on one cycle with the trajectory it drives and its bound diagnostics"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    h: np.ndarray = Field(..., description="(n_steps, M) control, zero above N_*")
    u1: np.ndarray = Field(..., description="(n_steps + 1, M) controlled trajectory")
    bound_ratios: np.ndarray = Field(..., description="||h||_1^2 / (k0 l^{(2s+1)/(3s+1)}) per step")
    terminal_gap: float

    @property
    def bound_ok(self) -> bool:
        return bool(np.all(self.bound_ratios <= 1.0))


class CycleDiagnostics(BaseModel):
    """Everything l0_update needs from one completed cycle"""
    branch: Branch
    u1: SpectralField
    u2: SpectralField
    H1_next: float
    H2_next: float
    binding_success: bool = False
    clauses: Dict[str, bool] = Field(default_factory=dict)
    lyap1: Optional[LyapunovAccumulator] = None
    lyap2: Optional[LyapunovAccumulator] = None

    @property
    def H_next(self) -> float:
        return self.H1_next + self.H2_next


class CycleRecord(BaseModel):
    """One line of the cycle log"""
    k: int
    branch: Branch
    l0_before: Optional[int]
    l0_after: Optional[int]
    H_k: float
    H_next: float
    coupled_duration: Optional[int] = Field(None, description="k - l0 when the cycle started coupled")
    accepted: Optional[bool] = Field(None, description="Maximal coupling put trajectory 1 on the shifted path")
    binding_success: Optional[bool] = None
    log_density: Optional[float] = None
    attempts: int = 0
    bound_violations: int = 0
    max_bound_ratio: float = 0.0
    terminal_gap: Optional[float] = None
    distance: float = Field(..., description="||u1 - u2||_1 at the end of the cycle")
    clauses: Dict[str, bool] = Field(default_factory=dict)
    failed_clause: Optional[str] = None
