"""Utilities package"""

from .errors import SnlsMixError, DimensionError, ParameterError
from .helpers import format_timestamp, make_json_serializable, config_hash, artifact_header, read_artifact_header
from .rng import make_stream

__all__ = [
    "SnlsMixError",
    "DimensionError",
    "ParameterError",
    "format_timestamp",
    "make_json_serializable",
    "config_hash",
    "artifact_header",
    "read_artifact_header",
    "make_stream",
]
