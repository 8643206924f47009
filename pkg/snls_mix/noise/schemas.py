"""
Pydantic schemas for the additive noise operator
"""

from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class NoiseOperator(BaseModel):
    """Diagonal noise b e_n = b_n e_n with N_* guaranteed-forced low modes"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    b_coeffs: np.ndarray = Field(..., description="Nonnegative b_n, n = 1..M")
    n_star: int = Field(..., ge=1, description="Number of forced low modes N_*")

    @field_validator("b_coeffs", mode="before")
    @classmethod
    def _check_b(cls, value: Any) -> np.ndarray:
        arr = np.array(value, dtype=np.float64, copy=True)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("b_coeffs must be a non-empty one-dimensional vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("b_coeffs contains non-finite entries")
        if np.any(arr < 0):
            raise ValueError("b_coeffs must be nonnegative")
        arr.flags.writeable = False
        return arr

    @model_validator(mode="after")
    def _check_n_star(self) -> "NoiseOperator":
        if self.n_star > self.b_coeffs.size:
            raise ValueError(f"n_star={self.n_star} exceeds the number of modes {self.b_coeffs.size}")
        return self

    @property
    def M(self) -> int:
        return int(self.b_coeffs.size)

    @classmethod
    def from_power_law(cls, M: int, n_star: int, scale: float = 1.0, exponent: float = 4.0,
                       cutoff: Optional[int] = None) -> "NoiseOperator":
        """b_n = scale * n^(-exponent) for n <= cutoff, zero above"""
        n = np.arange(1, M + 1, dtype=np.float64)
        b = scale * n ** (-exponent)
        if cutoff is not None:
            b[n > cutoff] = 0.0
        return cls(b_coeffs=b, n_star=n_star)

    def with_modes(self, M: int) -> "NoiseOperator":
        """Truncate or zero-pad to M modes"""
        b = np.zeros(M)
        keep = min(M, self.M)
        b[:keep] = self.b_coeffs[:keep]
        return NoiseOperator(b_coeffs=b, n_star=min(self.n_star, M))


class WienerIncrement(BaseModel):
    """One step of b dW: Re and Im of mode n each have variance b_n^2 dt / 2"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    delta_w: np.ndarray
    dt: float = Field(..., gt=0)

    @field_validator("delta_w", mode="before")
    @classmethod
    def _check_delta(cls, value: Any) -> np.ndarray:
        arr = np.array(value, dtype=np.complex128, copy=True)
        arr.flags.writeable = False
        return arr


class NoiseValidationReport(BaseModel):
    """Admissibility check on b: positivity on forced modes, HS norms, decay rate"""
    passed: bool
    offending_modes: List[int] = Field(default_factory=list)
    hs_norms: Dict[str, float] = Field(default_factory=dict, description="B_0..B_3 keyed by s")
    decay_exponent: Optional[float] = None
    decay_ok: Optional[bool] = Field(None, description="b_n decays at least like n^-4")
    warnings: List[str] = Field(default_factory=list)
