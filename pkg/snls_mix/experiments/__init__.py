"""Experiment files, scenario presets and the subcommand runner"""

from .schemas import ConfigError, ExperimentConfig
from .constants import SCENARIOS, SUBCOMMANDS, STREAM_ROLES
from .loader import (
    load_config,
    resolved_dump,
    build_noise,
    build_params,
    build_sim,
    build_coupling,
    initial_states,
)
from .runner import RunContext, make_context, resolve_params, run

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "SCENARIOS",
    "SUBCOMMANDS",
    "STREAM_ROLES",
    "load_config",
    "resolved_dump",
    "build_noise",
    "build_params",
    "build_sim",
    "build_coupling",
    "initial_states",
    "RunContext",
    "make_context",
    "resolve_params",
    "run",
]
