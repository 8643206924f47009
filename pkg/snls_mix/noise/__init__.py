"""Additive noise operator b, its Hilbert–Schmidt norms and Wiener increments"""

from .schemas import NoiseOperator, WienerIncrement, NoiseValidationReport
from .service import hs_norm, validate, increment_batch, sample_increment

__all__ = [
    "NoiseOperator",
    "WienerIncrement",
    "NoiseValidationReport",
    "hs_norm",
    "validate",
    "increment_batch",
    "sample_increment",
]
