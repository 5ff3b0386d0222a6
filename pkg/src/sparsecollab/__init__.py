"""Sparse sensor collaboration and selection for linear coherent estimation."""

__version__ = "0.1.0"

from .errors import CollabError, DomainError, InfeasibleError, ParameterError, SolverError  # noqa: E402
from .model import QuadForms, Scenario, build_forms, build_scenario  # noqa: E402
from .spectral import info_bound_J0, min_distortion_D0  # noqa: E402
from .strategies import (  # noqa: E402
    SolverConfig,
    SolveReport,
    solve_energy_constrained,
    solve_info_constrained,
    solve_joint,
)

__all__ = [
    "CollabError",
    "DomainError",
    "InfeasibleError",
    "ParameterError",
    "SolverError",
    "QuadForms",
    "Scenario",
    "SolveReport",
    "SolverConfig",
    "build_forms",
    "build_scenario",
    "info_bound_J0",
    "min_distortion_D0",
    "solve_energy_constrained",
    "solve_info_constrained",
    "solve_joint",
]
