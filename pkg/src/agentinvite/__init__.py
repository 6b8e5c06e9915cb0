"""Stability analysis, fluid limits and stochastic simulation of a call center
that invites agents on demand through a linear feedback rule."""
from .core import (
    FluidState,
    ModelParams,
    ParameterError,
    SimState,
    Trajectory,
    from_centered,
    load_params,
    to_centered,
    validate,
)
from .fluid import FluidConfig, detect_convergence, integrate
from .simulator import SimConfig, run
from .stability import build_matrices, condition_i, condition_ii, cqlf_exists, stability_report

__all__ = [
    "FluidConfig",
    "FluidState",
    "ModelParams",
    "ParameterError",
    "SimConfig",
    "SimState",
    "Trajectory",
    "build_matrices",
    "condition_i",
    "condition_ii",
    "cqlf_exists",
    "detect_convergence",
    "from_centered",
    "integrate",
    "load_params",
    "run",
    "stability_report",
    "to_centered",
    "validate",
]
