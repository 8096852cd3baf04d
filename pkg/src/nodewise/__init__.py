"""
Nodewise Lasso estimation of the precision matrix rows and the shared
cross-validated penalty.
"""

from .precision import PrecisionEstimate, nodewise_regression, precision_cache_key, precision_estimate
from .tuning import cv_columns, nodewise_cv_curves, nodewise_grid, nodewise_lambda_max, shared_cv_lambda_nodewise

__all__ = [
    "PrecisionEstimate",
    "nodewise_regression",
    "precision_estimate",
    "precision_cache_key",
    "shared_cv_lambda_nodewise",
    "nodewise_cv_curves",
    "nodewise_grid",
    "nodewise_lambda_max",
    "cv_columns",
]
