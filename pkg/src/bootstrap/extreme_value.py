"""
Extreme-value approximation of the studentized max statistic.

``max_j n (beta_breve_j - beta_j)^2 / omega_jj - 2 log|G| + log log|G|``
converges to the law ``F(x) = exp(-exp(-x / 2) / sqrt(pi))``.
"""

from typing import Iterable, Optional

import numpy as np

from src.utils.groups import as_group

from .distribution import check_alpha
from .testing import TestResult, resolve_null

_SQRT_PI = np.sqrt(np.pi)


def extreme_value_cdf(x):
    return np.exp(-np.exp(-np.asarray(x, dtype=np.float64) / 2.0) / _SQRT_PI)


def extreme_value_quantile(alpha: float) -> float:
    """``q`` with ``F(q) = 1 - alpha``."""
    alpha = check_alpha(alpha)
    return float(-2.0 * np.log(_SQRT_PI * np.log(1.0 / (1.0 - alpha))))


def _centering(group_size: int) -> float:
    return 2.0 * np.log(group_size) - np.log(np.log(group_size))


def extreme_value_critical(alpha: float, group_size: int) -> float:
    """
    Threshold for the squared studentized max statistic.

    Args:
        alpha: Level in (0, 1)
        group_size: ``|G| >= 2``

    Returns:
        float: ``2 log|G| - log log|G| + q_alpha``
    """
    if group_size < 2:
        raise ValueError(f"The extreme-value threshold needs |G| >= 2, got {group_size}")
    return float(_centering(group_size) + extreme_value_quantile(alpha))


def extreme_value_test(fit, beta_tilde, group: Optional[Iterable[int]], alpha: float) -> TestResult:
    """Reject when ``max_j n (beta_breve_j - beta_tilde_j)^2 / omega_jj`` exceeds the extreme-value threshold."""
    group = as_group(group, len(fit.beta_breve))
    beta_tilde = resolve_null(beta_tilde, len(fit.beta_breve))
    diff = fit.beta_breve[group] - beta_tilde[group]
    statistic = float(np.max(fit.n * diff ** 2 / fit.omega_diag[group]))
    critical = extreme_value_critical(alpha, group.size)
    p_value = float(1.0 - extreme_value_cdf(statistic - _centering(group.size)))
    return TestResult(reject=statistic > critical, statistic=statistic, critical=critical,
                      p_value=p_value, method="ex", group=group)


def extreme_value_half_width_factor(alpha: float, group_size: int) -> float:
    """Critical value for ``simultaneous_ci(..., studentized=True)`` matching the EX test."""
    return float(np.sqrt(max(extreme_value_critical(alpha, group_size), 0.0)))
