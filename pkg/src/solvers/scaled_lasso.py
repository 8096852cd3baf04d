from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, Optional

import numpy as np
from scipy.stats import norm

from src.config import settings, logger
from src.exceptions import DegenerateVariance, NoFixedPoint, SaturatedFit
from src.solvers.dataset import Dataset
from src.solvers.lasso import LassoFit, LassoProblem

_FIXED_POINT_TOL = 1e-10
_FIXED_POINT_MAX_ITER = 500
_DAMPING = 0.5
_MIN_VARIANCE = 1e-12


def _fixed_point_map(k: float, p: int) -> float:
    level = norm.isf(k / p)
    return level ** 4 + 2.0 * level ** 2


@lru_cache(maxsize=256)
def solve_k0(p: int) -> float:
    """Solve ``k = L^4(k/p) + 2 L^2(k/p)`` with ``L(t) = Phi^{-1}(1 - t)``.

    Damped fixed-point iteration started at ``k = 1``.

    Raises:
        NoFixedPoint: If the iteration does not settle within 500 steps
    """
    k = 1.0
    upper = p * (1.0 - 1e-12)
    for _ in range(_FIXED_POINT_MAX_ITER):
        k_new = (1.0 - _DAMPING) * k + _DAMPING * _fixed_point_map(k, p)
        k_new = min(max(k_new, 1e-12), upper)
        if abs(k_new - k) < _FIXED_POINT_TOL:
            return k_new
        k = k_new
    raise NoFixedPoint(f"k0 fixed point for p={p} did not converge", last_iterate=k)


def universal_lambda0(n: int, p: int) -> float:
    """Universal scaled-Lasso penalty ``sqrt(2) * Phi^{-1}(1 - k0/p) / sqrt(n)``."""
    if p < 2 or n < 1:
        raise ValueError(f"universal_lambda0 needs p >= 2 and n >= 1, got n={n}, p={p}")
    k0 = solve_k0(int(p))
    return float(np.sqrt(2.0) * norm.isf(k0 / p) / np.sqrt(n))


@dataclass
class ScaledLassoFit:
    beta_sc: np.ndarray
    sigma_hat: float
    sigma_hat_modified: float
    lambda0: float
    df: int
    outer_iterations: int
    converged: bool
    lasso: LassoFit

    def noise_variance(self, modified: bool = True) -> float:
        """sigma^2 estimate: the degrees-of-freedom corrected one by default."""
        sigma = self.sigma_hat_modified if modified else self.sigma_hat
        return float(sigma ** 2)

    def to_dict(self, one_based: bool = False) -> Dict[str, Any]:
        record = self.lasso.to_dict(one_based=one_based)
        record.update({
            "sigma_hat": self.sigma_hat,
            "sigma_hat_modified": self.sigma_hat_modified,
            "lambda0": self.lambda0,
            "df": self.df,
            "outer_iterations": self.outer_iterations,
        })
        return record


def scaled_lasso_fit(dataset: Dataset, lambda0: Optional[float] = None) -> ScaledLassoFit:
    """Joint estimate of coefficients and noise level by alternating Lasso and variance steps.

    Starting from ``sigma = ||Y|| / sqrt(n)``, each round fits the Lasso at
    penalty ``sigma * lambda0`` and then sets ``sigma^2 = ||Y - X beta||^2 / n``,
    until sigma moves by less than ``settings.SCALED_LASSO_TOL``.

    Args:
        dataset: Standardized data
        lambda0: Base penalty (defaults to ``universal_lambda0(n, p)``)

    Returns:
        ScaledLassoFit: Coefficients, both noise estimates and the final Lasso fit

    Raises:
        DegenerateVariance: If a variance step produces sigma^2 < 1e-12
        SaturatedFit: If the final support has ``df >= n``
    """
    if not dataset.standardized:
        logger.warning("scaled_lasso_fit called on a dataset that is not standardized")
    n, p = dataset.n, dataset.p
    if lambda0 is None:
        lambda0 = universal_lambda0(n, p)
    if lambda0 <= 0:
        raise ValueError(f"lambda0 must be positive, got {lambda0}")

    problem = LassoProblem.from_dataset(dataset)
    sigma = float(np.linalg.norm(dataset.Y) / np.sqrt(n))
    if sigma ** 2 < _MIN_VARIANCE:
        raise DegenerateVariance("Response has (numerically) zero variance")

    fit = None
    beta = None
    converged = False
    outer = 0
    for outer in range(1, settings.SCALED_LASSO_MAX_ITER + 1):
        fit = problem.fit(sigma * lambda0, warm_start=beta)
        beta = fit.beta
        resid = dataset.Y - dataset.X @ beta
        sigma_new = float(np.sqrt(resid @ resid / n))
        if sigma_new ** 2 < _MIN_VARIANCE:
            raise DegenerateVariance(f"Variance step gave sigma^2={sigma_new ** 2:.3g}", iteration=outer)
        step = abs(sigma_new - sigma)
        sigma = sigma_new
        if step < settings.SCALED_LASSO_TOL:
            converged = True
            break

    if not converged:
        logger.warning(f"Scaled Lasso stopped after {outer} alternations without sigma settling")

    df = int(np.count_nonzero(beta))
    if df >= n:
        raise SaturatedFit(f"Scaled Lasso support size {df} is not below n={n}", df=df, n=n)
    resid = dataset.Y - dataset.X @ beta
    sigma_modified = float(np.sqrt(resid @ resid / (n - df)))

    logger.debug(f"Scaled Lasso: sigma={sigma:.4g}, modified={sigma_modified:.4g}, "
                 f"df={df}, alternations={outer}")
    return ScaledLassoFit(
        beta_sc=beta,
        sigma_hat=sigma,
        sigma_hat_modified=sigma_modified,
        lambda0=float(lambda0),
        df=df,
        outer_iterations=outer,
        converged=converged,
        lasso=fit,
    )
