"""
Pydantic schemas for the Dirichlet sine basis
"""

from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


def _frozen_complex(value: Any, name: str) -> np.ndarray:
    arr = np.array(value, dtype=np.complex128, copy=True)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.flags.writeable = False
    return arr


class SpectralField(BaseModel):
    """
    Complex coefficients of u on e_n(x) = sqrt(2) sin(n pi x), n = 1..M

    Index 0 of `coeffs` holds the coefficient of e_1.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    coeffs: np.ndarray = Field(..., description="Complex coefficient vector of length M")

    @field_validator("coeffs", mode="before")
    @classmethod
    def _check_coeffs(cls, value: Any) -> np.ndarray:
        arr = _frozen_complex(value, "coeffs")
        if arr.size == 0:
            raise ValueError("coeffs must hold at least one mode")
        return arr

    @property
    def M(self) -> int:
        return int(self.coeffs.size)

    @classmethod
    def zeros(cls, M: int) -> "SpectralField":
        return cls(coeffs=np.zeros(M, dtype=np.complex128))

    @classmethod
    def mode(cls, n: int, M: int, value: complex = 1.0) -> "SpectralField":
        """Single-mode field value * e_n"""
        coeffs = np.zeros(M, dtype=np.complex128)
        coeffs[n - 1] = value
        return cls(coeffs=coeffs)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(coeffs=self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(coeffs=self.coeffs - other.coeffs)

    def __mul__(self, scalar: complex) -> "SpectralField":
        return SpectralField(coeffs=self.coeffs * scalar)

    __rmul__ = __mul__


class PhysicalGrid(BaseModel):
    """Values u(x_j) at x_j = j/(Q+1), j = 1..Q; the endpoints are implicitly zero"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    samples: np.ndarray = Field(..., description="Complex grid values of length Q")

    @field_validator("samples", mode="before")
    @classmethod
    def _check_samples(cls, value: Any) -> np.ndarray:
        return _frozen_complex(value, "samples")

    @property
    def Q(self) -> int:
        return int(self.samples.size)

    @property
    def points(self) -> np.ndarray:
        return np.arange(1, self.Q + 1) / (self.Q + 1)
