"""
Binary trajectory snapshots

Layout (all little-endian):
    8 bytes   magic b"SNLSMIX1"
    uint32    header length L
    L bytes   UTF-8 JSON header: M, dt, T, stride, n_records, seed, params, noise
    records   n_records * M complex128 values, each as two IEEE-754 doubles (re, im)
"""

import json
import struct
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from loguru import logger

from ..utils.helpers import make_json_serializable
from .schemas import SimConfig, Trajectory
from .service import ContractError

MAGIC = b"SNLSMIX1"
RECORD_DTYPE = np.dtype("<c16")


def write_snapshot(path: Union[str, Path], traj: Trajectory, cfg: SimConfig, seed: Optional[int] = None) -> Path:
    """
    Write a trajectory snapshot

    Args:
        path: Output file
        traj: Trajectory to store
        cfg: Config the trajectory was produced with
        seed: Experiment seed (defaults to traj.seed)

    Returns:
        Path written
    """
    path = Path(path)
    header = {
        "M": traj.M,
        "dt": traj.dt,
        "T": cfg.T,
        "stride": traj.stride,
        "n_records": len(traj),
        "seed": traj.seed if seed is None else seed,
        "params": cfg.params.model_dump(by_alias=True),
        "noise": {"b": cfg.noise.b_coeffs, "n_star": cfg.noise.n_star},
    }
    encoded = json.dumps(make_json_serializable(header), sort_keys=True).encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(encoded)))
        fh.write(encoded)
        fh.write(np.ascontiguousarray(traj.states, dtype=RECORD_DTYPE).tobytes())
    logger.info("Wrote snapshot", path=str(path), records=len(traj), M=traj.M)
    return path


def read_snapshot(path: Union[str, Path]) -> Tuple[Dict[str, Any], Trajectory]:
    """
    Read a snapshot written by write_snapshot

    Returns:
        (header, trajectory)

    Raises:
        ContractError: If the file is not a snapshot or is truncated
    """
    data = Path(path).read_bytes()
    if data[:len(MAGIC)] != MAGIC:
        raise ContractError(f"{path} is not a snapshot file")
    offset = len(MAGIC)
    (length,) = struct.unpack_from("<I", data, offset)
    offset += 4
    header = json.loads(data[offset:offset + length].decode("utf-8"))
    offset += length
    M, n_records = header["M"], header["n_records"]
    expected = n_records * M * RECORD_DTYPE.itemsize
    if len(data) - offset != expected:
        raise ContractError(f"{path} holds {len(data) - offset} record bytes, expected {expected}")
    states = np.frombuffer(data, dtype=RECORD_DTYPE, offset=offset).reshape(n_records, M).astype(np.complex128)
    traj = Trajectory(
        times=np.arange(n_records) * header["dt"] * header["stride"],
        states=states,
        dt=header["dt"],
        stride=header["stride"],
        seed=header["seed"],
    )
    return header, traj
