"""Experiment engine and command-line interface."""

from .cli import run_cli
from .experiments import (
    ExperimentRow,
    ExperimentSpec,
    MatrixSpec,
    oracle_mse,
    run_irl1_vs_dca,
    run_mse_study,
    run_phase_transition,
)
from .generators import gen_gaussian_matrix, gen_oversampled_dct, gen_sparse_signal
from .gnsp import check_gnsp_sampled, verify_counterexample

__all__ = [
    "run_cli",
    "ExperimentRow",
    "ExperimentSpec",
    "MatrixSpec",
    "oracle_mse",
    "run_irl1_vs_dca",
    "run_mse_study",
    "run_phase_transition",
    "gen_gaussian_matrix",
    "gen_oversampled_dct",
    "gen_sparse_signal",
    "check_gnsp_sampled",
    "verify_counterexample",
]
