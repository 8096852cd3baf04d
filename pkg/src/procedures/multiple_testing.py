from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np
from scipy.stats import norm

from src.bootstrap.distribution import Variant, check_alpha, critical_value
from src.bootstrap.multiplier import MultiplierBootstrap
from src.bootstrap.testing import resolve_null
from src.config import logger
from src.utils.groups import as_group

SIDES = ("one", "two")


@dataclass
class StepdownResult:
    rejected: np.ndarray
    alpha: float
    steps: List[Tuple[np.ndarray, float]] = field(default_factory=list)

    @property
    def critical_values(self) -> List[float]:
        return [critical for _, critical in self.steps]

    def to_dict(self, one_based: bool = False) -> Dict[str, Any]:
        offset = 1 if one_based else 0
        return {
            "method": "stepdown",
            "alpha": self.alpha,
            "rejected": [int(j) + offset for j in self.rejected],
            "steps": [{"active": [int(j) + offset for j in active], "critical": float(critical)}
                      for active, critical in self.steps],
        }


def stepdown_fwer(fit, beta_tilde, group: Optional[Iterable[int]], alpha: float, B: Optional[int] = None,
                  seed: int = 0, sided: str = "two", studentized: bool = False,
                  engine: Optional[MultiplierBootstrap] = None) -> StepdownResult:
    """
    Step-down multiple testing with bootstrap critical values over the shrinking active set.

    All steps read the same multiplier replicates, so critical values never
    increase from one step to the next.

    Args:
        fit: De-sparsified fit
        beta_tilde: Hypothesised coefficients (None for zero)
        group: Hypotheses to test (None for all)
        alpha: Family-wise level
        B: Bootstrap draws
        seed: Multiplier stream seed
        sided: ``one`` (``sqrt(n)(beta_breve - beta_tilde)``) or ``two`` (absolute value)
        studentized: Divide each statistic by ``sqrt(omega_jj)``
        engine: Replicates to reuse; built from ``fit`` when omitted

    Returns:
        StepdownResult listing every step
    """
    alpha = check_alpha(alpha)
    if sided not in SIDES:
        raise ValueError(f"sided must be one of {SIDES}, got {sided!r}")
    p = len(fit.beta_breve)
    group = as_group(group, p)
    beta_tilde = resolve_null(beta_tilde, p)
    variant = Variant.from_flags(studentized, two_sided=(sided == "two"))
    engine = engine or MultiplierBootstrap.from_fit(fit, B=B, seed=seed)

    stats = np.sqrt(fit.n) * (fit.beta_breve - beta_tilde)
    if studentized:
        stats = stats / np.sqrt(fit.omega_diag)
    if variant.two_sided:
        stats = np.abs(stats)

    result = StepdownResult(rejected=np.array([], dtype=np.intp), alpha=alpha)
    active = group
    while active.size:
        critical = critical_value(engine.distribution(active, variant), alpha)
        if result.steps and critical > result.steps[-1][1]:
            raise RuntimeError("Step-down critical values increased across steps")
        result.steps.append((active, critical))
        newly = active[stats[active] > critical]
        if newly.size == 0:
            break
        result.rejected = np.sort(np.concatenate([result.rejected, newly]))
        active = np.setdiff1d(active, newly)

    logger.debug(f"Step-down rejected {result.rejected.size} of {group.size} in {len(result.steps)} steps")
    return result


def holm_pvalues(fit, beta_tilde, group: np.ndarray) -> np.ndarray:
    """Two-sided Gaussian p-values of ``sqrt(n)|beta_breve_j - beta_tilde_j| / sqrt(omega_jj)``."""
    z = np.sqrt(fit.n) * np.abs(fit.beta_breve[group] - beta_tilde[group]) / np.sqrt(fit.omega_diag[group])
    return 2.0 * norm.sf(z)


def bonferroni_holm(fit, beta_tilde, group: Optional[Iterable[int]], alpha: float) -> np.ndarray:
    """
    Holm's step-down Bonferroni procedure on Gaussian p-values.

    Returns:
        Sorted indices of the rejected hypotheses
    """
    alpha = check_alpha(alpha)
    p = len(fit.beta_breve)
    group = as_group(group, p, allow_empty=True)
    if group.size == 0:
        return group
    beta_tilde = resolve_null(beta_tilde, p)
    pvalues = holm_pvalues(fit, beta_tilde, group)
    order = np.argsort(pvalues, kind="stable")
    m = group.size
    rejected = []
    for rank, position in enumerate(order):
        if pvalues[position] > alpha / (m - rank):
            break
        rejected.append(group[position])
    return np.sort(np.asarray(rejected, dtype=np.intp))
