"""
Bootstrap package: multiplier and empirical bootstrap distributions of max-type
statistics, critical values, the simultaneous test and the extreme-value
baseline.
"""

from .distribution import BootstrapDistribution, Variant, check_alpha, critical_value
from .extreme_value import (
    extreme_value_cdf,
    extreme_value_critical,
    extreme_value_half_width_factor,
    extreme_value_quantile,
    extreme_value_test,
)
from .multiplier import MultiplierBootstrap, empirical_bootstrap, empirical_draws, multiplier_bootstrap
from .testing import TestResult, max_statistic, resolve_null, simultaneous_test

__all__ = [
    "BootstrapDistribution",
    "Variant",
    "check_alpha",
    "critical_value",
    "MultiplierBootstrap",
    "multiplier_bootstrap",
    "empirical_bootstrap",
    "empirical_draws",
    "extreme_value_cdf",
    "extreme_value_critical",
    "extreme_value_quantile",
    "extreme_value_test",
    "extreme_value_half_width_factor",
    "TestResult",
    "max_statistic",
    "resolve_null",
    "simultaneous_test",
]
