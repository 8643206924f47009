"""Maximal coupling, Girsanov densities, binding controls and the cycle-by-cycle coupling construction"""

from .schemas import (
    CouplingConfig,
    CouplingState,
    CoupledDraw,
    TvBound,
    ControlPath,
    CycleDiagnostics,
    CycleRecord,
)
from .maximal import ResidualSamplingError, maximal_coupling, tv_upper_bound
from .girsanov import InvertibilityError, sigma_l_inverse, standard_increments, girsanov_logdensity
from .control import (
    BoundedController,
    FeedbackController,
    CompensatingController,
    PathDraw,
    co_simulate,
    build_control,
)
from .service import (
    CLAUSES,
    CoupledChain,
    initial_state,
    l0_update,
    coupled_cycle,
    write_cycle_log,
    read_cycle_log,
    run_coupled_chain,
    foias_prodi_pair,
)

__all__ = [
    "CouplingConfig",
    "CouplingState",
    "CoupledDraw",
    "TvBound",
    "ControlPath",
    "CycleDiagnostics",
    "CycleRecord",
    "ResidualSamplingError",
    "maximal_coupling",
    "tv_upper_bound",
    "InvertibilityError",
    "sigma_l_inverse",
    "standard_increments",
    "girsanov_logdensity",
    "BoundedController",
    "FeedbackController",
    "CompensatingController",
    "PathDraw",
    "co_simulate",
    "build_control",
    "CLAUSES",
    "CoupledChain",
    "initial_state",
    "l0_update",
    "coupled_cycle",
    "write_cycle_log",
    "read_cycle_log",
    "run_coupled_chain",
    "foias_prodi_pair",
]
