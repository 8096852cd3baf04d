from dataclasses import dataclass
from typing import Any, Dict, Iterable, Optional, Tuple

import numpy as np

from src.exceptions import EmptyTruth
from src.solvers.lasso import LassoFit
from src.utils.groups import as_group

DEFAULT_TAU = 2.0


@dataclass
class RecoveryResult:
    selected: np.ndarray
    tau: float
    candidates: np.ndarray
    thresholds: np.ndarray

    def to_dict(self, one_based: bool = False) -> Dict[str, Any]:
        offset = 1 if one_based else 0
        return {
            "selected": [int(j) + offset for j in self.selected],
            "tau": self.tau,
            "thresholds": self.thresholds.tolist(),
        }


def support_recover(fit, candidates: Optional[Iterable[int]] = None, tau: float = DEFAULT_TAU) -> RecoveryResult:
    """
    Threshold the de-sparsified estimates at ``sqrt(tau * omega_jj * log(p) / n)``.

    ``p`` is the full model dimension even when ``candidates`` is a subset.

    Args:
        fit: De-sparsified fit
        candidates: Candidate indices (None for all)
        tau: Threshold constant, 2 by default

    Returns:
        RecoveryResult
    """
    if tau < 0:
        raise ValueError(f"tau must be nonnegative, got {tau}")
    p = len(fit.beta_breve)
    candidates = as_group(candidates, p)
    thresholds = np.sqrt(tau * fit.omega_diag[candidates] * np.log(p) / fit.n)
    keep = np.abs(fit.beta_breve[candidates]) > thresholds
    return RecoveryResult(selected=candidates[keep], tau=float(tau), candidates=candidates, thresholds=thresholds)


def similarity(selected: Iterable[int], truth: Iterable[int]) -> float:
    """``|S_hat & S0| / sqrt(|S_hat| |S0|)``, zero for an empty selection."""
    selected, truth = set(int(j) for j in selected), set(int(j) for j in truth)
    if not truth:
        raise EmptyTruth("True support is empty")
    if not selected:
        return 0.0
    return len(selected & truth) / float(np.sqrt(len(selected) * len(truth)))


def selection_errors(selected: Iterable[int], truth: Iterable[int]) -> Tuple[int, int]:
    """False positives and false negatives of a selected support."""
    selected, truth = set(int(j) for j in selected), set(int(j) for j in truth)
    return len(selected - truth), len(truth - selected)


def lasso_support(fit: LassoFit) -> np.ndarray:
    """Active set of a Lasso fit, the plain-Lasso recovery baseline."""
    return fit.active_set
