"""Sparse recovery with the generalized-error-function (GERF) penalty."""

from .core import ProblemInstance, RecoveryResult, SolverConfig, relative_error
from .penalty import PenaltySpec, phi
from .prox import prox_gerf
from .solvers import dca_solve, irl1_solve, lasso_admm

__version__ = "0.1.0"

__all__ = [
    "ProblemInstance",
    "RecoveryResult",
    "SolverConfig",
    "PenaltySpec",
    "phi",
    "prox_gerf",
    "dca_solve",
    "irl1_solve",
    "lasso_admm",
    "relative_error",
]
