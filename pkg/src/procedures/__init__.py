"""
Inference procedures built on the de-sparsified fit: support recovery,
screening and the three-step test, step-down and Holm multiple testing.
"""

from .multiple_testing import StepdownResult, bonferroni_holm, holm_pvalues, stepdown_fwer
from .recovery import RecoveryResult, lasso_support, selection_errors, similarity, support_recover
from .screening import iterative_screen, marginal_screen, screen_size, split_sample
from .three_step import ScreenedModel, ThreeStepResult, screen, screened_test, split_and_screen, three_step_test

__all__ = [
    "RecoveryResult",
    "support_recover",
    "similarity",
    "selection_errors",
    "lasso_support",
    "split_sample",
    "screen_size",
    "marginal_screen",
    "iterative_screen",
    "screen",
    "ThreeStepResult",
    "three_step_test",
    "ScreenedModel",
    "split_and_screen",
    "screened_test",
    "StepdownResult",
    "stepdown_fwer",
    "bonferroni_holm",
    "holm_pvalues",
]
