from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from src.config import settings, logger
from src.exceptions import DidNotConverge, DimensionMismatch, NonPositiveWeight
from src.nodewise.precision import PrecisionEstimate, precision_estimate
from src.nodewise.tuning import shared_cv_lambda_nodewise
from src.solvers.dataset import Dataset, standardize
from src.solvers.lasso import LassoFit, soft_threshold
from src.solvers.scaled_lasso import universal_lambda0
from src.storage.cache_client import CacheClient

from .base_loss import LossSpec

_MIN_WEIGHT = 1e-12
_BACKTRACK = 0.5


def standardize_design(dataset: Dataset) -> Dataset:
    """Standardize the columns of ``X`` and leave the response untouched."""
    return replace(standardize(dataset), Y=dataset.Y, y_mean=0.0)


def default_glm_lambda(n: int, p: int) -> float:
    """Half the universal scaled-Lasso penalty."""
    return 0.5 * universal_lambda0(n, p)


def stationarity_residual(gradient: np.ndarray, beta: np.ndarray, lam: float) -> float:
    """``max_j dist(-gradient_j, lam * subdifferential |beta_j|)``."""
    active = beta != 0
    inactive_gap = np.maximum(np.abs(gradient[~active]) - lam, 0.0)
    active_gap = np.abs(gradient[active] + lam * np.sign(beta[active]))
    gaps = np.concatenate([inactive_gap, active_gap])
    return float(gaps.max()) if gaps.size else 0.0


def glm_lasso_fit(dataset: Dataset, loss: LossSpec, lam: float, warm_start: Optional[np.ndarray] = None,
                  strict: bool = False, tol: Optional[float] = None,
                  max_iter: Optional[int] = None) -> LassoFit:
    """
    l1-penalized empirical risk ``E_n L(y_i, x_i^T beta) + lam ||beta||_1`` by proximal gradient.

    With the squared loss ``(y - a)^2 / 2`` the objective is half of the linear
    Lasso objective at the same ``lam``, so both solvers share the minimizer.

    Args:
        dataset: Data (the response is used as is)
        loss: Convex loss
        lam: Penalty level
        warm_start: Optional starting coefficients
        strict: Raise ``DidNotConverge`` instead of returning a non-converged fit
        tol: Stationarity tolerance (defaults to settings.GLM_TOL)
        max_iter: Iteration cap (defaults to settings.GLM_MAX_ITER)

    Returns:
        LassoFit whose objective is the penalized empirical risk
    """
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    X, y = dataset.X, dataset.Y
    n, p = X.shape
    message = loss.validate_response(y)
    if message:
        raise ValueError(message)
    tol = settings.GLM_TOL if tol is None else tol
    max_iter = settings.GLM_MAX_ITER if max_iter is None else max_iter

    beta = np.zeros(p) if warm_start is None else np.array(warm_start, dtype=np.float64)
    if beta.shape != (p,):
        raise DimensionMismatch(f"warm start has length {beta.shape[0]}, expected {p}")

    lipschitz = loss.curvature_bound * np.linalg.norm(X, 2) ** 2 / n
    step = 1.0 / max(lipschitz, 1e-12)
    risk = loss.risk(X, y, beta)
    gradient = loss.gradient(X, y, beta)
    path: List[float] = [risk + lam * np.abs(beta).sum()]
    converged = stationarity_residual(gradient, beta, lam) < tol
    iterations = 0

    while not converged and iterations < max_iter:
        iterations += 1
        while True:
            candidate = soft_threshold(beta - step * gradient, step * lam)
            move = candidate - beta
            candidate_risk = loss.risk(X, y, candidate)
            bound = risk + gradient @ move + (move @ move) / (2.0 * step)
            if candidate_risk <= bound + 1e-15 * max(1.0, abs(risk)):
                break
            step *= _BACKTRACK
        beta = candidate
        risk = candidate_risk
        gradient = loss.gradient(X, y, beta)
        path.append(risk + lam * np.abs(beta).sum())
        converged = stationarity_residual(gradient, beta, lam) < tol or not np.any(move)

    fit = LassoFit(beta=beta, lam=float(lam), objective=path[-1], iterations=iterations,
                   converged=converged, objective_path=path)
    if not converged:
        logger.warning(f"Proximal gradient for {loss.name} loss stopped after {iterations} iterations")
        if strict:
            raise DidNotConverge(f"{loss.name} Lasso did not converge in {iterations} iterations", partial=fit)
    return fit


def weighted_design(dataset: Dataset, beta_hat: np.ndarray, loss: LossSpec) -> Dataset:
    """Rows ``sqrt(L''(y_i, x_i^T beta_hat)) x_i`` as a dataset for the nodewise regressions."""
    weights = loss.d2loss(dataset.Y, dataset.X @ beta_hat)
    low = np.flatnonzero(weights <= _MIN_WEIGHT)
    if low.size:
        raise NonPositiveWeight(f"{low.size} observations have curvature weight <= {_MIN_WEIGHT}",
                                rows=low[:20].tolist())
    return Dataset(X=np.sqrt(weights)[:, None] * dataset.X, Y=dataset.Y)


def glm_precision(dataset: Dataset, beta_hat: np.ndarray, loss: LossSpec,
                  lambdas: Union[None, float, Sequence[float]] = None, cv_seed: int = 0,
                  cache: Optional[CacheClient] = None, threads: Optional[int] = None) -> PrecisionEstimate:
    """
    Nodewise Lasso on the curvature-weighted design.

    Args:
        dataset: Data
        beta_hat: Penalized fit
        loss: Convex loss
        lambdas: Shared or per-column penalties (None selects a shared one by CV)
        cv_seed: Seed of the CV folds
        cache: Precision cache
        threads: Worker threads

    Returns:
        PrecisionEstimate approximating the inverse of ``E_n L''(y_i, x_i^T beta_hat) x_i x_i^T``
    """
    weighted = weighted_design(dataset, beta_hat, loss)
    if lambdas is None:
        lambdas = shared_cv_lambda_nodewise(weighted, seed=cv_seed, threads=threads)
    return precision_estimate(weighted, lambdas, cache=cache, threads=threads)


@dataclass
class GlmDesparsifiedFit:
    """De-biased convex-loss estimator ``beta_breve = beta_hat - Theta E_n L'(y_i, x_i^T beta_hat) x_i``."""

    beta_breve: np.ndarray
    beta_hat: np.ndarray
    w_diag: np.ndarray
    kappa: np.ndarray
    precision: PrecisionEstimate
    dloss_values: np.ndarray = field(repr=False)
    dataset: Dataset = field(repr=False)
    lasso: Optional[LassoFit] = field(default=None, repr=False)

    @property
    def theta_rows(self) -> np.ndarray:
        return self.precision.theta

    @property
    def omega_diag(self) -> np.ndarray:
        return self.w_diag

    @property
    def n(self) -> int:
        return self.dataset.n

    @property
    def p(self) -> int:
        return self.dataset.p

    def bootstrap_scores(self, group: Optional[np.ndarray] = None) -> np.ndarray:
        """``n x |G|`` matrix ``(Theta_j^T x_i) L'(y_i, x_i^T beta_hat)``."""
        theta = self.precision.theta if group is None else self.precision.theta[group]
        return (self.dataset.X @ theta.T) * self.dloss_values[:, None]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "beta_breve": self.beta_breve.tolist(),
            "beta_hat": self.beta_hat.tolist(),
            "w_diag": self.w_diag.tolist(),
        }


def glm_desparsify(dataset: Dataset, beta_hat: np.ndarray, precision: PrecisionEstimate,
                   loss: LossSpec) -> GlmDesparsifiedFit:
    """
    One-step correction of a penalized convex-loss fit.

    ``w_jj = Theta_j^T (X^T diag(L'^2) X / n) Theta_j`` is evaluated at ``beta_hat``.
    """
    beta_hat = np.asarray(beta_hat, dtype=np.float64)
    p = dataset.p
    if beta_hat.shape != (p,):
        raise DimensionMismatch(f"beta_hat has shape {beta_hat.shape}, expected ({p},)")
    if precision.theta.shape != (p, p):
        raise DimensionMismatch(f"Precision estimate has shape {precision.theta.shape}, expected ({p}, {p})")

    X, n = dataset.X, dataset.n
    dloss_values = loss.dloss(dataset.Y, X @ beta_hat)
    score = X.T @ dloss_values / n
    beta_breve = beta_hat - precision.theta @ score
    weighted_scores = (X @ precision.theta.T) * dloss_values[:, None]
    w_diag = np.einsum("ij,ij->j", weighted_scores, weighted_scores) / n
    if np.any(w_diag <= 0):
        logger.warning(f"{int(np.sum(w_diag <= 0))} de-biased variances are zero")
    return GlmDesparsifiedFit(beta_breve=beta_breve, beta_hat=beta_hat, w_diag=w_diag, kappa=-score,
                              precision=precision, dloss_values=dloss_values, dataset=dataset)


def glm_desparsified(dataset: Dataset, loss: LossSpec, lam: Optional[float] = None,
                     nodewise_lambda: Optional[float] = None, cv_seed: int = 0,
                     cache: Optional[CacheClient] = None, threads: Optional[int] = None) -> GlmDesparsifiedFit:
    """Penalized fit, weighted nodewise precision and de-biasing on a design-standardized dataset."""
    lam = default_glm_lambda(dataset.n, dataset.p) if lam is None else lam
    fit = glm_lasso_fit(dataset, loss, lam)
    precision = glm_precision(dataset, fit.beta, loss, nodewise_lambda, cv_seed=cv_seed, cache=cache,
                              threads=threads)
    result = glm_desparsify(dataset, fit.beta, precision, loss)
    result.lasso = fit
    logger.info(f"{loss.name} de-biased fit: {len(fit.active_set)} active of {dataset.p}")
    return result
