from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Optional

import numpy as np

from src.config import logger
from src.exceptions import DegenerateVariance, DimensionMismatch
from src.nodewise.precision import PrecisionEstimate, precision_estimate
from src.nodewise.tuning import shared_cv_lambda_nodewise
from src.solvers.dataset import Dataset
from src.solvers.lasso import LassoFit
from src.solvers.scaled_lasso import ScaledLassoFit, scaled_lasso_fit
from src.storage.cache_client import CacheClient
from src.utils.groups import as_group

_IDENTITY_TOL = 1e-8


@dataclass
class DesparsifiedFit:
    """De-biased Lasso ``beta_breve = beta_hat + Theta X^T (Y - X beta_hat) / n`` with its variances."""

    beta_breve: np.ndarray
    omega_diag: np.ndarray
    sigma_eps_sq: float
    lasso: LassoFit
    precision: PrecisionEstimate
    dataset: Dataset = field(repr=False)
    delta: Optional[np.ndarray] = None
    noise: Optional[ScaledLassoFit] = field(default=None, repr=False)
    _scores: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.dataset.n

    @property
    def p(self) -> int:
        return self.dataset.p

    @property
    def beta_hat(self) -> np.ndarray:
        return self.lasso.beta

    @property
    def sigma_eps(self) -> float:
        return float(np.sqrt(self.sigma_eps_sq))

    @property
    def scores(self) -> np.ndarray:
        """``n x p`` matrix ``M[i, j] = (X Theta_j^T)_i``."""
        if self._scores is None:
            self._scores = self.dataset.X @ self.precision.theta.T
        return self._scores

    def to_dict(self) -> Dict[str, Any]:
        return {
            "beta_breve": self.beta_breve.tolist(),
            "omega_diag": self.omega_diag.tolist(),
            "sigma_eps_sq": float(self.sigma_eps_sq),
        }


def desparsify(dataset: Dataset, lasso_fit: LassoFit, precision: PrecisionEstimate,
               sigma_eps_sq: float) -> DesparsifiedFit:
    """
    One-step correction of a Lasso fit by the nodewise precision estimate.

    Args:
        dataset: Data the Lasso was fitted on
        lasso_fit: Initial Lasso (or scaled-Lasso) fit
        precision: Nodewise estimate of the inverse Gram matrix
        sigma_eps_sq: Noise variance used in ``omega_jj``

    Returns:
        DesparsifiedFit with ``omega_jj = sigma_eps_sq * Theta_j^T Sigma_hat Theta_j``

    Raises:
        DimensionMismatch: If the pieces disagree on ``p``
    """
    p = dataset.p
    if lasso_fit.beta.shape != (p,):
        raise DimensionMismatch(f"Lasso fit has {lasso_fit.beta.shape[0]} coefficients, expected {p}")
    if precision.theta.shape != (p, p):
        raise DimensionMismatch(f"Precision estimate has shape {precision.theta.shape}, expected ({p}, {p})")
    if not sigma_eps_sq > 0:
        raise ValueError(f"sigma_eps_sq must be positive, got {sigma_eps_sq}")

    n = dataset.n
    resid = dataset.Y - dataset.X @ lasso_fit.beta
    beta_breve = lasso_fit.beta + precision.theta @ (dataset.X.T @ resid) / n

    scores = dataset.X @ precision.theta.T
    omega_diag = sigma_eps_sq * np.einsum("ij,ij->j", scores, scores) / n
    if np.any(omega_diag <= 0):
        raise DegenerateVariance("Non-positive de-sparsified variance",
                                 columns=np.flatnonzero(omega_diag <= 0).tolist())

    return DesparsifiedFit(beta_breve=beta_breve, omega_diag=omega_diag, sigma_eps_sq=float(sigma_eps_sq),
                           lasso=lasso_fit, precision=precision, dataset=dataset, _scores=scores)


@dataclass
class RemainderDiagnostic:
    delta: np.ndarray
    delta_star: np.ndarray
    identity_error: float
    max_active: float
    max_inactive: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "delta": self.delta.tolist(),
            "delta_star": self.delta_star.tolist(),
            "identity_error": self.identity_error,
            "max_active": self.max_active,
            "max_inactive": self.max_inactive,
        }


def remainder_diagnostic(fit: DesparsifiedFit, beta_true: np.ndarray) -> RemainderDiagnostic:
    """Remainder ``Delta = -sqrt(n) (Theta Sigma_hat - I)(beta_hat - beta_true)`` and its studentized form.

    Also checks ``sqrt(n)(beta_breve - beta_true) = Theta X^T (Y - X beta_true) / sqrt(n) + Delta``.
    Only meaningful in simulations, where ``beta_true`` is known.
    """
    beta_true = np.asarray(beta_true, dtype=np.float64)
    if beta_true.shape != (fit.p,):
        raise DimensionMismatch(f"beta_true has shape {beta_true.shape}, expected ({fit.p},)")
    X, Y, theta = fit.dataset.X, fit.dataset.Y, fit.precision.theta
    n = fit.n
    root_n = np.sqrt(n)

    diff = fit.beta_hat - beta_true
    delta = -root_n * (theta @ (X.T @ (X @ diff)) / n - diff)
    delta_star = delta / np.sqrt(fit.omega_diag)
    fit.delta = delta

    lhs = root_n * (fit.beta_breve - beta_true)
    rhs = theta @ (X.T @ (Y - X @ beta_true)) / root_n + delta
    identity_error = float(np.max(np.abs(lhs - rhs)))
    if identity_error > _IDENTITY_TOL * max(1.0, float(np.max(np.abs(lhs)))):
        logger.warning(f"Remainder identity off by {identity_error:.3e}")

    active = beta_true != 0
    abs_star = np.abs(delta_star)
    return RemainderDiagnostic(
        delta=delta,
        delta_star=delta_star,
        identity_error=identity_error,
        max_active=float(abs_star[active].max()) if active.any() else 0.0,
        max_inactive=float(abs_star[~active].max()) if (~active).any() else 0.0,
    )


@dataclass
class ConfidenceIntervals:
    group: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    critical: float
    studentized: bool

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def mean_width(self) -> float:
        return float(self.widths.mean())

    def covers(self, beta: np.ndarray) -> bool:
        """True when every interval contains the matching entry of ``beta``."""
        values = np.asarray(beta)[self.group]
        return bool(np.all((self.lower <= values) & (values <= self.upper)))

    def to_dict(self, one_based: bool = False) -> Dict[str, Any]:
        offset = 1 if one_based else 0
        return {
            "group": [int(j) + offset for j in self.group],
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "critical": self.critical,
            "studentized": self.studentized,
            "mean_width": self.mean_width,
        }


def simultaneous_ci(fit, group: Optional[Iterable[int]], critical: float,
                    studentized: bool) -> ConfidenceIntervals:
    """
    Simultaneous intervals ``beta_breve_j +/- c / sqrt(n)`` (or ``c * sqrt(omega_jj / n)``).

    Works for any fit exposing ``beta_breve``, ``omega_diag`` and ``n``, so the
    convex-loss fits share it.

    Args:
        fit: De-sparsified fit
        group: Coefficient indices (None for all)
        critical: Two-sided bootstrap (or extreme-value) critical value
        studentized: Scale each half-width by ``sqrt(omega_jj)``

    Returns:
        ConfidenceIntervals
    """
    if critical < 0:
        raise ValueError(f"critical value must be nonnegative, got {critical}")
    group = as_group(group, len(fit.beta_breve))
    centre = fit.beta_breve[group]
    if studentized:
        half = critical * np.sqrt(fit.omega_diag[group] / fit.n)
    else:
        half = np.full(group.size, critical / np.sqrt(fit.n))
    return ConfidenceIntervals(group=group, lower=centre - half, upper=centre + half,
                               critical=float(critical), studentized=studentized)


def desparsified_lasso(dataset: Dataset, nodewise_lambda: Optional[float] = None,
                       lambda0: Optional[float] = None, modified_variance: bool = True,
                       cv_seed: int = 0, precision: Optional[PrecisionEstimate] = None,
                       cache: Optional[CacheClient] = None, threads: Optional[int] = None) -> DesparsifiedFit:
    """
    Scaled Lasso, nodewise precision estimate and de-sparsification in one call.

    Args:
        dataset: Standardized data
        nodewise_lambda: Shared nodewise penalty (None selects it by CV)
        lambda0: Scaled-Lasso base penalty (None for the universal choice)
        modified_variance: Use the degrees-of-freedom corrected noise variance
        cv_seed: Seed of the nodewise CV folds
        precision: Precomputed precision estimate to reuse (fixed designs)
        cache: Precision cache
        threads: Worker threads

    Returns:
        DesparsifiedFit with ``noise`` set to the scaled-Lasso fit
    """
    scaled = scaled_lasso_fit(dataset, lambda0)
    if precision is None:
        if nodewise_lambda is None:
            nodewise_lambda = shared_cv_lambda_nodewise(dataset, seed=cv_seed, threads=threads)
        precision = precision_estimate(dataset, nodewise_lambda, cache=cache, threads=threads)
    fit = desparsify(dataset, scaled.lasso, precision, scaled.noise_variance(modified=modified_variance))
    fit.noise = scaled
    return fit
