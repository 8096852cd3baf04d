"""
De-sparsified Lasso: the one-step corrected estimator, its variances, the
remainder diagnostics and simultaneous confidence intervals.
"""

from .estimator import (
    ConfidenceIntervals,
    DesparsifiedFit,
    RemainderDiagnostic,
    desparsified_lasso,
    desparsify,
    remainder_diagnostic,
    simultaneous_ci,
)

__all__ = [
    "DesparsifiedFit",
    "desparsify",
    "desparsified_lasso",
    "RemainderDiagnostic",
    "remainder_diagnostic",
    "ConfidenceIntervals",
    "simultaneous_ci",
]
