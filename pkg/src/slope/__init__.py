"""Sorted L-One Penalized Estimation.

Sorted-l1 norm and its prox, proximal-gradient solvers, FDR-calibrated
regularization sequences, selection procedures and simulation studies.
"""

__version__ = "0.1.0"

from .inference import (DegenerateFitError, RankDeficientError, RejectionSet, ScaledSlopeResult,
                        bh_step_down, bh_step_up, fdr_threshold_estimate, ols_refit,
                        scaled_slope, slope_orthogonal_select)
from .lambdas import (GaussianSequence, MonteCarloSequence, inv_norm_cdf, lambda_bh,
                      lambda_bonferroni, lambda_gaussian, lambda_monte_carlo, lambda_oscar,
                      standardize)
from .solver import (SlopeProblem, SlopeSolution, SolverConfig, SolverError, duality_gap,
                     fixed_point_residual, operator_norm_sq, solve, solve_fista,
                     solve_proximal_gradient)
from .sorted_l1 import (ProxWorkspace, dual_norm, isotonic_regression, prox_sorted_l1,
                        prox_sorted_l1_sorted_nonneg, soft_threshold, sorted_l1_norm)

__all__ = [
    "DegenerateFitError", "GaussianSequence", "MonteCarloSequence", "ProxWorkspace",
    "RankDeficientError", "RejectionSet", "ScaledSlopeResult", "SlopeProblem", "SlopeSolution",
    "SolverConfig", "SolverError", "bh_step_down", "bh_step_up", "dual_norm", "duality_gap",
    "fdr_threshold_estimate", "fixed_point_residual", "inv_norm_cdf", "isotonic_regression",
    "lambda_bh", "lambda_bonferroni", "lambda_gaussian", "lambda_monte_carlo", "lambda_oscar",
    "ols_refit", "operator_norm_sq", "prox_sorted_l1", "prox_sorted_l1_sorted_nonneg",
    "scaled_slope", "slope_orthogonal_select", "soft_threshold", "solve", "solve_fista",
    "solve_proximal_gradient", "sorted_l1_norm", "standardize",
]
