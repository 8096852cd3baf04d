from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from src.config import settings, logger
from src.exceptions import DegenerateTau, DimensionMismatch, HDInferError, PrecisionEstimateError
from src.solvers.dataset import Dataset
from src.solvers.lasso import LassoProblem, solve_lasso_gram
from src.storage.cache_client import CacheClient, array_key
from src.utils.parallel import ordered_map

_MIN_TAU_SQ = 1e-12


@dataclass
class PrecisionEstimate:
    """Nodewise Lasso approximate inverse ``Theta = T^{-2} C`` of ``X^T X / n``.

    Row ``j`` of ``theta`` is built from the regression of column ``j`` on the
    others: ``theta[j, j] = 1 / tau_sq[j]`` and ``theta[j, k] = -gamma_jk / tau_sq[j]``.
    ``gamma[j]`` holds the ``p - 1`` coefficients in the order of the remaining
    columns. The matrix is not symmetric in general.
    """

    theta: np.ndarray
    tau_sq: np.ndarray
    lambdas: np.ndarray
    gamma: np.ndarray

    @property
    def p(self) -> int:
        return int(self.theta.shape[0])

    @property
    def theta_rows(self) -> np.ndarray:
        return self.theta

    def gamma_full(self, j: int) -> np.ndarray:
        """``gamma[j]`` scattered back to length ``p`` with a zero at ``j``."""
        full = np.zeros(self.p)
        full[np.arange(self.p) != j] = self.gamma[j]
        return full

    def diagonal_gap(self, sigma_hat: np.ndarray) -> np.ndarray:
        """``|(Theta Sigma)_jj - 1|`` for every ``j``; bounded by ``lambda_j / tau_j^2``."""
        return np.abs(np.einsum("jk,kj->j", self.theta, sigma_hat) - 1.0)

    def to_arrays(self) -> Dict[str, np.ndarray]:
        return {"theta": self.theta, "tau_sq": self.tau_sq, "lambdas": self.lambdas, "gamma": self.gamma}

    @classmethod
    def from_arrays(cls, arrays: Dict[str, np.ndarray]) -> "PrecisionEstimate":
        return cls(theta=arrays["theta"], tau_sq=arrays["tau_sq"], lambdas=arrays["lambdas"],
                   gamma=arrays["gamma"])


def _others(p: int, j: int) -> np.ndarray:
    return np.concatenate([np.arange(j), np.arange(j + 1, p)])


def nodewise_regression(dataset: Dataset, j: int, lambda_j: float,
                        gram: Optional[np.ndarray] = None) -> Tuple[np.ndarray, float]:
    """
    Lasso regression of column ``j`` on the remaining columns.

    Args:
        dataset: Standardized data (only ``X`` is used)
        j: Column index
        lambda_j: Penalty, in the ``||X_j - X_{-j} g||^2 / n + 2 lambda_j ||g||_1`` convention
        gram: Optional precomputed ``X^T X / n`` to slice instead of refitting from ``X``

    Returns:
        Tuple of ``gamma_hat`` (length ``p - 1``) and
        ``tau_sq = ||X_j - X_{-j} gamma_hat||^2 / n + lambda_j ||gamma_hat||_1``

    Raises:
        DegenerateTau: If ``tau_sq < 1e-12``
    """
    X = dataset.X
    n, p = X.shape
    if p < 2:
        raise DimensionMismatch(f"Nodewise regression needs p >= 2, got p={p}")
    if not 0 <= j < p:
        raise DimensionMismatch(f"Column {j} out of range for p={p}")
    if lambda_j <= 0:
        raise ValueError(f"Nodewise penalty must be positive, got {lambda_j}")

    others = _others(p, j)
    if gram is None and p <= settings.GRAM_MAX_P:
        gram = X.T @ X / n
    if gram is not None:
        fit = solve_lasso_gram(gram[np.ix_(others, others)], gram[others, j], float(gram[j, j]), lambda_j)
    else:
        fit = LassoProblem(X[:, others], X[:, j]).fit(lambda_j)
    if not fit.converged:
        logger.warning(f"Nodewise regression for column {j} did not converge")

    gamma = fit.beta
    resid = X[:, j] - X[:, others] @ gamma
    tau_sq = float(resid @ resid / n + lambda_j * np.abs(gamma).sum())
    if tau_sq < _MIN_TAU_SQ:
        raise DegenerateTau(j, tau_sq)
    return gamma, tau_sq


def _expand_lambdas(lambdas: Union[float, Sequence[float]], p: int) -> np.ndarray:
    lambdas = np.asarray(lambdas, dtype=np.float64)
    if lambdas.ndim == 0:
        lambdas = np.full(p, float(lambdas))
    if lambdas.shape != (p,):
        raise DimensionMismatch(f"Expected a scalar or {p} nodewise penalties, got shape {lambdas.shape}")
    if np.any(lambdas <= 0):
        raise ValueError("Nodewise penalties must be positive")
    return lambdas


def precision_cache_key(dataset: Dataset, lambdas: np.ndarray) -> str:
    return f"precision/{dataset.fingerprint()}_{array_key(lambdas)}"


def precision_estimate(dataset: Dataset, lambdas: Union[float, Sequence[float]],
                       cache: Optional[CacheClient] = None,
                       threads: Optional[int] = None) -> PrecisionEstimate:
    """
    Run the nodewise regressions for every column and assemble ``Theta``.

    Args:
        dataset: Standardized data
        lambdas: Shared penalty or one penalty per column
        cache: Optional cache consulted before (and filled after) the computation
        threads: Worker threads for the column loop

    Returns:
        PrecisionEstimate

    Raises:
        PrecisionEstimateError: Listing every column whose regression failed
    """
    n, p = dataset.n, dataset.p
    if p < 2:
        raise DimensionMismatch(f"Nodewise estimation needs p >= 2, got p={p}")
    lambdas = _expand_lambdas(lambdas, p)

    key = precision_cache_key(dataset, lambdas) if cache is not None else None
    if cache is not None:
        arrays = cache.download_arrays(key)
        if arrays is not None:
            logger.info(f"Loaded nodewise precision estimate from cache ({key})")
            return PrecisionEstimate.from_arrays(arrays)

    gram = dataset.X.T @ dataset.X / n if p <= settings.GRAM_MAX_P else None

    def run_column(j: int):
        try:
            return nodewise_regression(dataset, j, float(lambdas[j]), gram=gram)
        except HDInferError as e:
            return e

    results = ordered_map(run_column, range(p), threads=threads)
    errors = {j: result for j, result in enumerate(results) if isinstance(result, HDInferError)}
    if errors:
        logger.error(f"Nodewise regression failed for {len(errors)} of {p} columns")
        raise PrecisionEstimateError(errors)

    theta = np.zeros((p, p))
    tau_sq = np.empty(p)
    gamma = np.empty((p, p - 1))
    for j, (gamma_j, tau_j) in enumerate(results):
        others = _others(p, j)
        gamma[j] = gamma_j
        tau_sq[j] = tau_j
        theta[j, j] = 1.0 / tau_j
        theta[j, others] = -gamma_j / tau_j

    estimate = PrecisionEstimate(theta=theta, tau_sq=tau_sq, lambdas=lambdas, gamma=gamma)
    logger.info(f"Nodewise precision estimate done for p={p} (median tau^2={np.median(tau_sq):.4g})")
    if cache is not None:
        cache.upload_arrays(key, **estimate.to_arrays())
    return estimate
