from typing import Optional, Tuple

import numpy as np

from src.config import logger
from src.exceptions import DegenerateSplit
from src.solvers.dataset import Dataset
from src.solvers.scaled_lasso import scaled_lasso_fit

_MIN_PART = 10

SCREEN_SIZE_RULES = ("d2_minus_one", "d2_over_log")


def split_sample(n: int, c0: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Seeded random split of ``range(n)`` into a screening part and a testing part.

    Args:
        n: Sample size
        c0: Fraction going to the screening part, ``|D1| = floor(c0 n)``
        seed: Seed of the permutation

    Returns:
        Tuple of sorted index arrays (D1, D2)

    Raises:
        DegenerateSplit: If either part has fewer than 10 observations
    """
    if not 0.0 < c0 < 1.0:
        raise ValueError(f"c0 must lie in (0, 1), got {c0}")
    size = int(np.floor(c0 * n))
    if size < _MIN_PART or n - size < _MIN_PART:
        raise DegenerateSplit(f"Split of n={n} with c0={c0} leaves parts of {size} and {n - size}",
                              d1=size, d2=n - size)
    permutation = np.random.default_rng(seed).permutation(n)
    return np.sort(permutation[:size]), np.sort(permutation[size:])


def screen_size(d2_size: int, rule: str = "d2_minus_one") -> int:
    """Screened model size: ``|D2| - 1`` or ``floor(|D2| / log |D2|)``."""
    if rule == "d2_minus_one":
        return max(1, d2_size - 1)
    if rule == "d2_over_log":
        return max(1, int(np.floor(d2_size / np.log(d2_size))))
    raise ValueError(f"Unknown screen size rule {rule!r}; expected one of {SCREEN_SIZE_RULES}")


def _top_k(scores: np.ndarray, k: int) -> np.ndarray:
    # stable sort keeps the smaller index first among equal scores
    order = np.argsort(-scores, kind="stable")
    return np.sort(order[:k])


def marginal_screen(dataset: Dataset, k: int, response: Optional[np.ndarray] = None,
                    columns: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Keep the ``k`` columns with the largest absolute marginal correlation ``|X_j^T Y|``.

    Args:
        dataset: Standardized screening data
        k: Number of columns to keep
        response: Screen against this vector instead of ``dataset.Y``
        columns: Restrict the ranking to these columns

    Returns:
        Sorted column indices
    """
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    columns = np.arange(dataset.p) if columns is None else np.asarray(columns, dtype=np.intp)
    if k >= columns.size:
        return np.sort(columns)
    y = dataset.Y if response is None else response
    w = np.abs(dataset.X[:, columns].T @ y)
    return np.sort(columns[_top_k(w, k)])


def iterative_screen(dataset: Dataset, k: int, k1: Optional[int] = None,
                     lambda0: Optional[float] = None) -> np.ndarray:
    """
    Two-stage screening: Lasso picks ``k1`` columns, marginal screening of the residuals fills the rest.

    The first stage ranks the scaled-Lasso active set by ``|beta_j|`` and pads with
    marginal screening when fewer than ``k1`` columns are active.

    Args:
        dataset: Standardized screening data
        k: Total number of columns to keep
        k1: Size of the Lasso stage (defaults to ``k // 2``)
        lambda0: Scaled-Lasso base penalty (None for the universal choice)

    Returns:
        Sorted column indices, exactly ``min(k, p)`` of them
    """
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if k >= dataset.p:
        return np.arange(dataset.p)
    k1 = k // 2 if k1 is None else int(k1)
    if not 0 <= k1 < k:
        raise ValueError(f"k1 must satisfy 0 <= k1 < k, got k1={k1}, k={k}")
    if k1 == 0:
        return marginal_screen(dataset, k)

    fit = scaled_lasso_fit(dataset, lambda0)
    beta = fit.beta_sc
    active = np.flatnonzero(beta)
    first = active[np.argsort(-np.abs(beta[active]), kind="stable")][:k1]
    if first.size < k1:
        rest = np.setdiff1d(np.arange(dataset.p), first)
        padding = marginal_screen(dataset, k1 - first.size, columns=rest)
        first = np.concatenate([first, padding])

    residual = dataset.Y - dataset.X @ beta
    remaining = np.setdiff1d(np.arange(dataset.p), first)
    second = marginal_screen(dataset, k - first.size, response=residual, columns=remaining)
    logger.debug(f"Iterative screening kept {first.size} Lasso and {second.size} residual columns")
    return np.sort(np.concatenate([first, second]))
