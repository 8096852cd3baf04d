"""
Convex-loss extension: l1-penalized fits by proximal gradient, nodewise
precision on the curvature-weighted design, de-biasing and the multiplier
bootstrap with per-observation scores.
"""

from .base_loss import LossSpec
from .bootstrap import glm_bootstrap
from .estimator import (
    GlmDesparsifiedFit,
    default_glm_lambda,
    glm_desparsified,
    glm_desparsify,
    glm_lasso_fit,
    glm_precision,
    standardize_design,
    stationarity_residual,
    weighted_design,
)
from .losses import LogisticLoss, SquaredLoss, get_loss, logistic_loss, squared_loss

__all__ = [
    "LossSpec",
    "LogisticLoss",
    "SquaredLoss",
    "logistic_loss",
    "squared_loss",
    "get_loss",
    "glm_lasso_fit",
    "glm_precision",
    "glm_desparsify",
    "glm_desparsified",
    "glm_bootstrap",
    "GlmDesparsifiedFit",
    "default_glm_lambda",
    "standardize_design",
    "stationarity_residual",
    "weighted_design",
]
