"""
Pydantic schemas for time stepping
"""

import math
from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..energy import EnergyParams
from ..noise import NoiseOperator
from ..spectral import SpectralField


class SimConfig(BaseModel):
    """Galerkin size, time grid, equation parameters and noise of one simulation"""
    model_config = ConfigDict(frozen=True)

    M: int = Field(..., ge=1, description="Galerkin truncation")
    dt: float = Field(..., gt=0, description="Time step")
    T: float = Field(..., gt=0, description="Horizon")
    params: EnergyParams
    noise: NoiseOperator
    scheme: Literal["strang"] = "strang"

    @model_validator(mode="after")
    def _check_grid(self) -> "SimConfig":
        if self.T < self.dt * (1 - 1e-12):
            raise ValueError(f"horizon T={self.T} is shorter than dt={self.dt}")
        if self.noise.M != self.M:
            raise ValueError(f"noise has {self.noise.M} modes but M={self.M}")
        return self

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.T / self.dt - 1e-9))

    @property
    def n_star(self) -> int:
        return self.noise.n_star


class Trajectory(BaseModel):
    """
    States on a uniform time grid

    `states` holds every `stride`-th step; `noise_record` (when kept) holds
    every step's increment b dW, so it has stride * (len(times) - 1) rows.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    times: np.ndarray
    states: np.ndarray = Field(..., description="(n_records, M) complex coefficients")
    noise_record: Optional[np.ndarray] = Field(None, description="(n_steps, M) increments b dW")
    dt: float = Field(..., gt=0)
    stride: int = Field(1, ge=1)
    seed: Optional[int] = None

    @field_validator("states", "noise_record", mode="before")
    @classmethod
    def _as_complex(cls, value: Any) -> Any:
        if value is None:
            return None
        arr = np.asarray(value, dtype=np.complex128)
        if arr.ndim != 2:
            raise ValueError(f"expected a (rows, M) array, got shape {arr.shape}")
        return arr

    @field_validator("times", mode="before")
    @classmethod
    def _as_real(cls, value: Any) -> np.ndarray:
        return np.asarray(value, dtype=np.float64)

    @model_validator(mode="after")
    def _check_lengths(self) -> "Trajectory":
        if self.times.size != self.states.shape[0]:
            raise ValueError("times and states must have equal lengths")
        if self.times.size > 1 and not np.allclose(np.diff(self.times), self.dt * self.stride, rtol=1e-9, atol=0):
            raise ValueError("times must be uniform with spacing dt * stride")
        if self.noise_record is not None and self.noise_record.shape[0] != self.stride * (self.times.size - 1):
            raise ValueError("noise_record must hold one increment per step")
        return self

    @property
    def M(self) -> int:
        return int(self.states.shape[1])

    def __len__(self) -> int:
        return int(self.times.size)

    def state(self, i: int) -> SpectralField:
        return SpectralField(coeffs=self.states[i])

    @property
    def final(self) -> SpectralField:
        return self.state(-1)
