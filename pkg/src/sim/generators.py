from typing import Optional, Tuple

import numpy as np
from scipy.linalg import cholesky, toeplitz
from scipy.special import expit

from src.config import logger
from src.exceptions import NotPositiveDefinite

from .scenario import CoefficientKind, CoefficientPattern, CovarianceKind, CovarianceSpec, ErrorDistribution

_JITTER = 1e-10


def make_covariance(spec: CovarianceSpec, p: int) -> np.ndarray:
    """
    Fill the ``p x p`` design covariance from its formula.

    Args:
        spec: Covariance family and correlation
        p: Dimension

    Returns:
        np.ndarray: Covariance with unit diagonal
    """
    if spec.kind == CovarianceKind.IDENTITY:
        return np.eye(p)
    if spec.kind == CovarianceKind.TOEPLITZ:
        return toeplitz(spec.rho ** np.arange(p, dtype=np.float64))
    if spec.kind == CovarianceKind.EXCHANGEABLE:
        sigma = np.full((p, p), spec.rho)
        np.fill_diagonal(sigma, 1.0)
        return sigma
    # Block diagonal: full blocks of `block` columns, the remainder uncorrelated
    sigma = np.eye(p)
    for start in range(0, (p // spec.block) * spec.block, spec.block):
        stop = start + spec.block
        sigma[start:stop, start:stop] = spec.rho
    np.fill_diagonal(sigma, 1.0)
    return sigma


def covariance_factor(sigma: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, retrying once with a ``1e-10`` diagonal jitter."""
    try:
        return cholesky(sigma, lower=True)
    except np.linalg.LinAlgError:
        logger.warning("Covariance is not numerically positive definite; retrying with jitter")
    try:
        return cholesky(sigma + _JITTER * np.eye(sigma.shape[0]), lower=True)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("Cholesky factorization failed after jitter", p=int(sigma.shape[0]))


def sample_design(sigma: np.ndarray, n: int, seed: int) -> np.ndarray:
    """``n`` i.i.d. rows from ``N_p(0, sigma)``."""
    factor = covariance_factor(sigma)
    z = np.random.default_rng(seed).standard_normal((n, sigma.shape[0]))
    return z @ factor.T


def sample_errors(dist: ErrorDistribution, n: int, seed: int) -> np.ndarray:
    """Unit-variance errors: ``t(4)/sqrt(2)``, ``(Gamma(4, 1) - 4)/2`` or standard normal."""
    rng = np.random.default_rng(seed)
    if dist == ErrorDistribution.STUDENT_T4_SCALED:
        return rng.standard_t(4, size=n) / np.sqrt(2.0)
    if dist == ErrorDistribution.GAMMA41_STANDARDIZED:
        return (rng.gamma(4.0, 1.0, size=n) - 4.0) / 2.0
    return rng.standard_normal(n)


def make_coefficients(pattern: CoefficientPattern, p: int, s0: int, seed: int,
                      n: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    True coefficient vector and its support.

    Args:
        pattern: Coefficient pattern
        p: Dimension
        s0: Support size
        seed: Seed of the uniform draws and of the random support
        n: Sample size, needed when the magnitude is given through ``kappa``

    Returns:
        Tuple of ``beta0`` and the sorted support indices
    """
    beta0 = np.zeros(p)
    if s0 == 0:
        return beta0, np.array([], dtype=np.intp)
    rng = np.random.default_rng(seed)
    if pattern.kind == CoefficientKind.UNIF_RANDOM:
        support = np.sort(rng.choice(p, size=s0, replace=False)).astype(np.intp)
    else:
        support = np.arange(s0, dtype=np.intp)

    if pattern.kind == CoefficientKind.FIXED_MAGNITUDE:
        if pattern.value is not None:
            magnitude = pattern.value
        else:
            if n is None:
                raise ValueError("n is required for a kappa-based magnitude")
            magnitude = np.sqrt(pattern.kappa * np.log(p) / n)
        beta0[support] = magnitude
    else:
        beta0[support] = rng.uniform(pattern.low, pattern.high, size=s0)
    return beta0, support


def logistic_response(linear_predictor: np.ndarray, seed: int) -> np.ndarray:
    """Bernoulli responses with success probability ``expit(linear_predictor)``."""
    u = np.random.default_rng(seed).random(linear_predictor.shape[0])
    return (u < expit(linear_predictor)).astype(np.float64)
