"""
Penalized least-squares solvers: Lasso by coordinate descent, the scaled Lasso
with its universal penalty, and K-fold cross-validation of the penalty.
"""

from .cross_validation import cv_error_curve, cv_lambda, fold_partition, lambda_grid, path_sse
from .dataset import Dataset, standardize
from .lasso import LassoFit, LassoProblem, kkt_violation, lasso_fit, lasso_objective, soft_threshold, solve_lasso_gram
from .scaled_lasso import ScaledLassoFit, scaled_lasso_fit, solve_k0, universal_lambda0

__all__ = [
    "Dataset",
    "standardize",
    "LassoFit",
    "LassoProblem",
    "lasso_fit",
    "lasso_objective",
    "kkt_violation",
    "soft_threshold",
    "solve_lasso_gram",
    "ScaledLassoFit",
    "scaled_lasso_fit",
    "solve_k0",
    "universal_lambda0",
    "cv_lambda",
    "cv_error_curve",
    "fold_partition",
    "lambda_grid",
    "path_sse",
]
