"""
Pydantic schemas for the energy and Foias–Prodi functionals
"""

from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class EnergyParams(BaseModel):
    """
    Equation parameters and calibrated constants

    `lam` is the sign lambda of the nonlinearity (+1 focusing, -1 defocusing).
    G and G1 stay None until calibrated in the focusing case and are forced
    to 0 in the defocusing case.
    """
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    sigma: float = Field(..., ge=0, description="Nonlinearity exponent")
    lam: Literal[1, -1] = Field(..., alias="lambda", description="Sign of the nonlinearity")
    alpha: float = Field(..., ge=0, description="Linear damping rate")
    G: Optional[float] = Field(None, ge=0, description="Modified-energy constant")
    G1: Optional[float] = Field(None, ge=0, description="Constant making J >= |grad r|^2 / 2")
    Lambda: float = Field(1.0, gt=0, description="Foias-Prodi rate constant")

    @model_validator(mode="before")
    @classmethod
    def _defocusing_constants(cls, data: Any) -> Any:
        if isinstance(data, dict):
            lam = data.get("lam", data.get("lambda"))
            if lam == -1:
                data = dict(data)
                data["G"] = data.get("G") or 0.0
                data["G1"] = data.get("G1") or 0.0
        return data

    @model_validator(mode="after")
    def _check_range(self) -> "EnergyParams":
        if self.lam == 1 and self.sigma >= 2:
            raise ValueError(f"focusing case requires sigma in [0, 2), got {self.sigma}")
        return self

    @property
    def focusing(self) -> bool:
        return self.lam == 1

    @property
    def calibrated(self) -> bool:
        return self.G is not None and self.G1 is not None

    @property
    def mass_exponent(self) -> float:
        """2 + 4 sigma / (2 - sigma); finite only for sigma < 2"""
        if self.sigma >= 2:
            return float("inf")
        return 2.0 + 4.0 * self.sigma / (2.0 - self.sigma)

    @property
    def lyapunov_power(self) -> float:
        """Exponent 3 sigma + 1 used by ell and the coupling cap"""
        return 3.0 * self.sigma + 1.0


class LyapunovAccumulator(BaseModel):
    """E_{u,k}(t, s) = H^k(u(t)) + (alpha k / 2) int_s^t H^k(u(r)) dr"""
    model_config = ConfigDict(frozen=True)

    k: float = Field(..., ge=1)
    current: float = Field(..., description="H^k at time t")
    integral: float = Field(0.0, ge=0, description="(alpha k / 2) times the running integral")
    t0: float = 0.0
    t: float = 0.0

    @property
    def value(self) -> float:
        return self.current + self.integral


class PairHistory(BaseModel):
    """Time series of two trajectories on a common uniform grid; r = u1 - u2"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    times: np.ndarray
    u1: np.ndarray = Field(..., description="(n_times, M) coefficients of the first trajectory")
    u2: np.ndarray = Field(..., description="(n_times, M) coefficients of the second trajectory")

    @field_validator("times", mode="before")
    @classmethod
    def _check_times(cls, value: Any) -> np.ndarray:
        arr = np.asarray(value, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("times must be a non-empty vector")
        return arr

    @field_validator("u1", "u2", mode="before")
    @classmethod
    def _check_states(cls, value: Any) -> np.ndarray:
        arr = np.asarray(value, dtype=np.complex128)
        if arr.ndim != 2:
            raise ValueError(f"states must be (n_times, M), got shape {arr.shape}")
        return arr

    @model_validator(mode="after")
    def _check_shapes(self) -> "PairHistory":
        if self.u1.shape != self.u2.shape or self.u1.shape[0] != self.times.size:
            raise ValueError("times, u1 and u2 must be aligned")
        return self

    @property
    def r(self) -> np.ndarray:
        return self.u1 - self.u2
