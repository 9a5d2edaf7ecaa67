"""Divergence-based weighting, stacking and negative-exponentiated weighting of model predictions."""

from .core import (
    DiagnosticsReport,
    DimensionError,
    LogDensityMatrix,
    PenaltyConfig,
    check_simplex,
    diagnostics,
    divergence_objective,
    divergence_objective_gradient,
    divergence_weights,
    exponentiated_objective,
    mixture_log_score,
    model_selection_index,
    negative_exponentiated_weights,
    new_weights,
    optimism_prior,
    stacking_weights,
)
from .optimism import FoldPlan, aicc_penalty, cross_validate, cv_optimism, make_folds
from .solver import SolverConfig, SolverError, SolverReport, minimize_on_simplex

__version__ = "0.1.0"
