"""
Helper utilities for snls-mix
Shared functions used across modules
"""

import hashlib
import json
import math
from datetime import datetime, timezone
from typing import Any, Optional

import numpy as np


def format_timestamp(dt: Optional[datetime] = None) -> str:
    """
    Format datetime as ISO string

    Args:
        dt: Datetime object (defaults to now, UTC)

    Returns:
        ISO formatted timestamp string
    """
    if dt is None:
        dt = datetime.now(timezone.utc)
    return dt.isoformat()


def make_json_serializable(obj: Any) -> Any:
    """
    Convert non-JSON-serializable objects to serializable format

    Complex numbers become [re, im] pairs, numpy arrays become lists and
    non-finite floats become None.

    Args:
        obj: Object to convert

    Returns:
        JSON-serializable version of the object
    """
    if isinstance(obj, dict):
        return {str(k): make_json_serializable(v) for k, v in obj.items()}
    elif isinstance(obj, np.ndarray):
        return [make_json_serializable(v) for v in obj.tolist()]
    elif isinstance(obj, (list, tuple)):
        return [make_json_serializable(v) for v in obj]
    elif isinstance(obj, complex):
        return [make_json_serializable(obj.real), make_json_serializable(obj.imag)]
    elif hasattr(obj, 'item'):  # numpy scalars
        return make_json_serializable(obj.item())
    elif isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return None
        return obj
    elif obj is None or isinstance(obj, (str, int, bool)):
        return obj
    else:
        return str(obj)


def config_hash(payload: Any, length: int = 12) -> str:
    """
    Stable short hash of a JSON-serializable payload

    Args:
        payload: Resolved configuration (dict or pydantic dump)
        length: Number of hex characters kept

    Returns:
        Hex digest prefix
    """
    text = json.dumps(make_json_serializable(payload), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:length]


def artifact_header(seed: int, config: Any) -> str:
    """
    Leading comment line embedding the seed and resolved config in an artifact

    Returns:
        "# {json}" without a trailing newline
    """
    text = json.dumps(make_json_serializable({"seed": seed, "config": config}), separators=(",", ":"))
    return f"# {text}"


def read_artifact_header(line: str) -> Optional[dict]:
    """Parse a line written by artifact_header; None for any other line"""
    if not line.startswith("# "):
        return None
    return json.loads(line[2:])
