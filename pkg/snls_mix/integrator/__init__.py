"""Strang-splitting time stepper, the high-mode reconstruction map and trajectory snapshots"""

from .schemas import SimConfig, Trajectory
from .service import (
    ContractError,
    BlowUpError,
    StrangStepper,
    get_stepper,
    check_control_support,
    step,
    simulate,
    phi_reconstruct,
    split_low_high,
)
from .snapshot import write_snapshot, read_snapshot

__all__ = [
    "SimConfig",
    "Trajectory",
    "ContractError",
    "BlowUpError",
    "StrangStepper",
    "get_stepper",
    "check_control_support",
    "step",
    "simulate",
    "phi_reconstruct",
    "split_low_high",
    "write_snapshot",
    "read_snapshot",
]
