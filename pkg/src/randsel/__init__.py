"""Randomized kernel-alignment feature selection and multiple-kernel boosting.

The selector estimates how much each feature contributes to the centered
kernel target alignment on random feature/row subsamples, culls the weakest
features and repeats.  The resulting sequence of nested feature sets feeds a
grid of kernel ridge weak learners that LPBoost combines into a classifier.
"""

from .data import Dataset, gen_xor, load_csv, save_csv
from .exceptions import (
    ClassCoverageError,
    ConfigurationError,
    CoverageError,
    DegenerateKernelError,
    DegenerateLabelError,
    InfeasibleError,
    InputError,
    LpSolverError,
    NumericError,
    ParameterError,
    RandSelError,
    SchemaError,
)
from .kernels import alignment, center, gaussian_kernel, kernel_target_alignment, label_kernel
from .lp import LinearProgram, LpStatus, solve
from .mkl import EnsembleModel, NegativeSubsample, build_kernel_grid, fit_ensemble, fit_weak, lpboost_combine, predict, tune_D
from .selector import ContributionTable, RandSelConfig, SelectionTrace, aggregate_contributions, cull, evaluate_task, run

__version__ = "0.1.0"

__all__ = [
    "Dataset", "gen_xor", "load_csv", "save_csv",
    "alignment", "center", "gaussian_kernel", "kernel_target_alignment", "label_kernel",
    "LinearProgram", "LpStatus", "solve",
    "EnsembleModel", "NegativeSubsample", "build_kernel_grid", "fit_ensemble", "fit_weak",
    "lpboost_combine", "predict", "tune_D",
    "ContributionTable", "RandSelConfig", "SelectionTrace", "aggregate_contributions", "cull",
    "evaluate_task", "run",
    "RandSelError", "InputError", "ParameterError", "DegenerateLabelError", "DegenerateKernelError",
    "ClassCoverageError", "CoverageError", "ConfigurationError", "NumericError", "InfeasibleError",
    "LpSolverError", "SchemaError",
]
