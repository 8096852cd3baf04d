from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from src.config import settings, logger
from src.exceptions import DidNotConverge, DimensionMismatch, Underdetermined
from src.solvers.dataset import Dataset


def soft_threshold(z, t):
    """Soft-thresholding operator ``sign(z) * max(|z| - t, 0)``."""
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def lasso_objective(X: np.ndarray, y: np.ndarray, beta: np.ndarray, lam: float) -> float:
    """``||y - X beta||_2^2 / n + 2 lam ||beta||_1``."""
    resid = y - X @ beta
    return float(resid @ resid / X.shape[0] + 2.0 * lam * np.abs(beta).sum())


def kkt_violation(X: np.ndarray, y: np.ndarray, beta: np.ndarray, lam: float) -> float:
    """Largest violation of the Lasso KKT conditions at ``beta``.

    With ``g = X^T (y - X beta) / n``: inactive coordinates need ``|g_j| <= lam``,
    active ones need ``g_j = lam * sign(beta_j)``.
    """
    grad = X.T @ (y - X @ beta) / X.shape[0]
    active = beta != 0
    inactive_gap = np.maximum(np.abs(grad[~active]) - lam, 0.0)
    active_gap = np.abs(grad[active] - lam * np.sign(beta[active]))
    gaps = np.concatenate([inactive_gap, active_gap])
    return float(gaps.max()) if gaps.size else 0.0


@dataclass
class LassoFit:
    """Solution of ``min ||Y - X beta||^2 / n + 2 lam ||beta||_1``."""

    beta: np.ndarray
    lam: float
    objective: float
    iterations: int
    converged: bool
    objective_path: List[float] = field(default_factory=list)

    @property
    def active_set(self) -> np.ndarray:
        return np.flatnonzero(self.beta)

    def to_dict(self, one_based: bool = False) -> Dict[str, Any]:
        offset = 1 if one_based else 0
        return {
            "beta": self.beta.tolist(),
            "lambda": float(self.lam),
            "active_set": [int(j) + offset for j in self.active_set],
            "objective": float(self.objective),
        }


def _coordinate_descent_gram(gram, xty, yty, lam, beta, cd_tol, max_sweeps):
    """Cyclic coordinate descent with covariance updates.

    Keeps ``grad = X^T (y - X beta) / n`` current through rank-one updates with
    rows of ``gram``. Full sweeps alternate with sweeps over the active set until
    a full sweep moves no coefficient by more than ``cd_tol``.
    """
    diag = np.diag(gram).copy()
    grad = xty - gram @ beta
    path: List[float] = []
    sweeps = 0

    def objective() -> float:
        return float(yty - beta @ xty - beta @ grad + 2.0 * lam * np.abs(beta).sum())

    def sweep(coords) -> float:
        nonlocal grad
        max_change = 0.0
        for j in coords:
            d = diag[j]
            if d <= 0.0:
                continue
            old = beta[j]
            z = grad[j] + d * old
            if z > lam:
                new = (z - lam) / d
            elif z < -lam:
                new = (z + lam) / d
            else:
                new = 0.0
            if new != old:
                delta = new - old
                beta[j] = new
                grad -= gram[j] * delta
                if abs(delta) > max_change:
                    max_change = abs(delta)
        return max_change

    converged = False
    all_coords = range(len(xty))
    while sweeps < max_sweeps:
        change = sweep(all_coords)
        sweeps += 1
        path.append(objective())
        if change < cd_tol:
            converged = True
            break
        while sweeps < max_sweeps:
            change = sweep(np.flatnonzero(beta))
            sweeps += 1
            path.append(objective())
            if change < cd_tol:
                break
    return beta, sweeps, converged, path


def _coordinate_descent_naive(X, y, lam, beta, cd_tol, max_sweeps):
    """Cyclic coordinate descent with residual updates (large ``p``)."""
    n = X.shape[0]
    X = np.asfortranarray(X)
    col_sq = (X ** 2).sum(axis=0) / n
    resid = y - X @ beta
    path: List[float] = []
    sweeps = 0

    def sweep(coords) -> float:
        nonlocal resid
        max_change = 0.0
        for j in coords:
            d = col_sq[j]
            if d <= 0.0:
                continue
            old = beta[j]
            z = X[:, j] @ resid / n + d * old
            new = float(soft_threshold(z, lam)) / d
            if new != old:
                delta = new - old
                beta[j] = new
                resid -= X[:, j] * delta
                if abs(delta) > max_change:
                    max_change = abs(delta)
        return max_change

    converged = False
    all_coords = range(X.shape[1])
    while sweeps < max_sweeps:
        change = sweep(all_coords)
        sweeps += 1
        path.append(float(resid @ resid / n + 2.0 * lam * np.abs(beta).sum()))
        if change < cd_tol:
            converged = True
            break
        while sweeps < max_sweeps:
            change = sweep(np.flatnonzero(beta))
            sweeps += 1
            path.append(float(resid @ resid / n + 2.0 * lam * np.abs(beta).sum()))
            if change < cd_tol:
                break
    return beta, sweeps, converged, path


def solve_lasso_gram(gram: np.ndarray, xty: np.ndarray, yty: float, lam: float,
                     warm_start: Optional[np.ndarray] = None,
                     cd_tol: Optional[float] = None,
                     max_sweeps: Optional[int] = None) -> LassoFit:
    """Lasso from sufficient statistics ``X^T X / n``, ``X^T y / n`` and ``y^T y / n``.

    The reported objective is evaluated from the same statistics.
    """
    cd_tol = settings.CD_TOL if cd_tol is None else cd_tol
    max_sweeps = settings.MAX_SWEEPS if max_sweeps is None else max_sweeps
    beta = np.zeros(len(xty)) if warm_start is None else np.array(warm_start, dtype=np.float64)
    beta, sweeps, converged, path = _coordinate_descent_gram(gram, xty, yty, lam, beta, cd_tol, max_sweeps)
    objective = path[-1] if path else float(yty)
    return LassoFit(beta=beta, lam=float(lam), objective=objective, iterations=sweeps,
                    converged=converged, objective_path=path)


class LassoProblem:
    """Design and response prepared for repeated Lasso fits at different penalties.

    The Gram matrix is formed once (when ``p <= settings.GRAM_MAX_P``) and reused
    across calls, which is what the scaled-Lasso alternation and warm-started
    paths need.
    """

    def __init__(self, X: np.ndarray, y: np.ndarray):
        if X.shape[0] != y.shape[0]:
            raise DimensionMismatch(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
        self.X = X
        self.y = y
        self.n, self.p = X.shape
        self.use_gram = self.p <= settings.GRAM_MAX_P
        self._gram = None
        self._xty = None

    @classmethod
    def from_dataset(cls, dataset: Dataset) -> "LassoProblem":
        return cls(dataset.X, dataset.Y)

    @property
    def gram(self) -> np.ndarray:
        if self._gram is None:
            self._gram = self.X.T @ self.X / self.n
        return self._gram

    @property
    def xty(self) -> np.ndarray:
        if self._xty is None:
            self._xty = self.X.T @ self.y / self.n
        return self._xty

    def fit(self, lam: float, warm_start: Optional[np.ndarray] = None, strict: bool = False,
            cd_tol: Optional[float] = None, max_sweeps: Optional[int] = None) -> LassoFit:
        if lam < 0:
            raise ValueError(f"lambda must be nonnegative, got {lam}")
        if warm_start is not None and len(warm_start) != self.p:
            raise DimensionMismatch(f"warm start has length {len(warm_start)}, expected {self.p}")

        if lam == 0:
            if self.p > self.n:
                raise Underdetermined(f"lambda = 0 requires p <= n, got p={self.p}, n={self.n}")
            beta = np.linalg.lstsq(self.X, self.y, rcond=None)[0]
            return LassoFit(beta=beta, lam=0.0, objective=lasso_objective(self.X, self.y, beta, 0.0),
                            iterations=0, converged=True)

        cd_tol = settings.CD_TOL if cd_tol is None else cd_tol
        max_sweeps = settings.MAX_SWEEPS if max_sweeps is None else max_sweeps
        beta = np.zeros(self.p) if warm_start is None else np.array(warm_start, dtype=np.float64)
        if self.use_gram:
            beta, sweeps, converged, path = _coordinate_descent_gram(
                self.gram, self.xty, float(self.y @ self.y / self.n), lam, beta, cd_tol, max_sweeps)
        else:
            beta, sweeps, converged, path = _coordinate_descent_naive(
                self.X, self.y, lam, beta, cd_tol, max_sweeps)

        fit = LassoFit(beta=beta, lam=float(lam), objective=lasso_objective(self.X, self.y, beta, lam),
                       iterations=sweeps, converged=converged, objective_path=path)
        if not converged:
            logger.warning(f"Lasso at lambda={lam:.4g} stopped after {sweeps} sweeps without converging")
            if strict:
                raise DidNotConverge(f"Lasso did not converge in {sweeps} sweeps", partial=fit)
        else:
            logger.debug(f"Lasso at lambda={lam:.4g} converged in {sweeps} sweeps, "
                         f"{len(fit.active_set)} active")
        return fit


def lasso_fit(dataset: Dataset, lam: float, warm_start: Optional[np.ndarray] = None,
              strict: bool = False) -> LassoFit:
    """Fit the Lasso ``min ||Y - X beta||^2 / n + 2 lam ||beta||_1`` by coordinate descent.

    Args:
        dataset: Data to fit
        lam: Penalty level (``lam = 0`` gives least squares and needs ``p <= n``)
        warm_start: Optional starting coefficients
        strict: Raise ``DidNotConverge`` (carrying the partial fit) instead of
            returning a non-converged fit

    Returns:
        LassoFit: Coefficients, penalty, objective and convergence diagnostics
    """
    return LassoProblem.from_dataset(dataset).fit(lam, warm_start=warm_start, strict=strict)
