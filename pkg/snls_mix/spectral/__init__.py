"""
Dirichlet sine eigenbasis on [0,1]
Coefficient/grid transforms, projectors, norms, nonlinearity and linear group
"""

from .schemas import SpectralField, PhysicalGrid
from .service import (
    SineBasis,
    get_basis,
    nonlinear_grid_size,
    lp_grid_size,
    synthesize,
    analyze,
    sobolev_norm,
    lp_norm,
    project,
    nonlinearity,
    linear_flow,
    gagliardo_nirenberg_ratio,
)

__all__ = [
    "SpectralField",
    "PhysicalGrid",
    "SineBasis",
    "get_basis",
    "nonlinear_grid_size",
    "lp_grid_size",
    "synthesize",
    "analyze",
    "sobolev_norm",
    "lp_norm",
    "project",
    "nonlinearity",
    "linear_flow",
    "gagliardo_nirenberg_ratio",
]
