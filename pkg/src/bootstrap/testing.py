from dataclasses import dataclass
from typing import Any, Dict, Iterable, Optional, Union

import numpy as np

from src.exceptions import DimensionMismatch, GroupMismatch
from src.utils.groups import as_group

from .distribution import BootstrapDistribution, Variant, critical_value


@dataclass
class TestResult:
    __test__ = False

    reject: bool
    statistic: float
    critical: Optional[float]
    p_value: float
    method: str
    group: np.ndarray

    def to_dict(self, one_based: bool = False) -> Dict[str, Any]:
        offset = 1 if one_based else 0
        return {
            "method": self.method,
            "reject": bool(self.reject),
            "statistic": float(self.statistic),
            "critical": None if self.critical is None else float(self.critical),
            "p_value": float(self.p_value),
            "group": [int(j) + offset for j in self.group],
        }


def resolve_null(beta_tilde: Union[None, float, Iterable[float]], p: int) -> np.ndarray:
    """Hypothesised coefficients as a length-``p`` vector (None means zero)."""
    if beta_tilde is None:
        return np.zeros(p)
    beta_tilde = np.asarray(beta_tilde, dtype=np.float64)
    if beta_tilde.ndim == 0:
        return np.full(p, float(beta_tilde))
    if beta_tilde.shape != (p,):
        raise DimensionMismatch(f"Null vector has shape {beta_tilde.shape}, expected ({p},)")
    return beta_tilde


def max_statistic(fit, beta_tilde: np.ndarray, group: np.ndarray, variant: Variant) -> float:
    """``max_j sqrt(n) (beta_breve_j - beta_tilde_j)`` in the form ``variant`` asks for."""
    values = np.sqrt(fit.n) * (fit.beta_breve[group] - beta_tilde[group])
    if variant.studentized:
        values = values / np.sqrt(fit.omega_diag[group])
    if variant.two_sided:
        values = np.abs(values)
    return float(values.max())


def simultaneous_test(fit, beta_tilde, group: Optional[Iterable[int]], dist: BootstrapDistribution,
                      alpha: float) -> TestResult:
    """
    Test ``H0: beta_j = beta_tilde_j for all j in G`` against a bootstrap distribution.

    Args:
        fit: De-sparsified fit (linear or convex-loss)
        beta_tilde: Hypothesised coefficients (None for zero)
        group: Coefficient indices; must equal the distribution's group
        dist: Bootstrap distribution whose variant fixes the statistic
        alpha: Level

    Returns:
        TestResult with ``reject`` iff the statistic exceeds the critical value
    """
    p = len(fit.beta_breve)
    group = as_group(group, p)
    if not np.array_equal(group, np.sort(dist.group)):
        raise GroupMismatch("Bootstrap distribution was drawn for a different group",
                            group_size=int(group.size), dist_group_size=int(dist.group.size))
    beta_tilde = resolve_null(beta_tilde, p)
    statistic = max_statistic(fit, beta_tilde, group, dist.variant)
    critical = critical_value(dist, alpha)
    return TestResult(reject=statistic > critical, statistic=statistic, critical=critical,
                      p_value=dist.p_value(statistic), method=dist.variant.value, group=group)
