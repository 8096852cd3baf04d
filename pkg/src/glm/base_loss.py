from abc import ABC, abstractmethod
from typing import Dict, Optional

import numpy as np

from src.config import logger


class LossSpec(ABC):
    """Base class for convex losses ``L(y, a)`` of a linear predictor ``a = x^T beta``."""

    name: str = "loss"
    # bound on L''(y, a) used for the initial proximal step
    curvature_bound: float = 1.0

    def __init__(self):
        self.logger = logger

    @abstractmethod
    def loss(self, y: np.ndarray, a: np.ndarray) -> np.ndarray:
        """Pointwise loss ``L(y, a)``."""
        raise NotImplementedError("Subclasses must implement loss")

    @abstractmethod
    def dloss(self, y: np.ndarray, a: np.ndarray) -> np.ndarray:
        """First derivative in ``a``."""
        raise NotImplementedError("Subclasses must implement dloss")

    @abstractmethod
    def d2loss(self, y: np.ndarray, a: np.ndarray) -> np.ndarray:
        """Second derivative in ``a``."""
        raise NotImplementedError("Subclasses must implement d2loss")

    def risk(self, X: np.ndarray, y: np.ndarray, beta: np.ndarray) -> float:
        """Empirical risk ``E_n L(y_i, x_i^T beta)``."""
        return float(np.mean(self.loss(y, X @ beta)))

    def gradient(self, X: np.ndarray, y: np.ndarray, beta: np.ndarray) -> np.ndarray:
        """``E_n L'(y_i, x_i^T beta) x_i``."""
        return X.T @ self.dloss(y, X @ beta) / X.shape[0]

    def check_derivatives(self, y_values: np.ndarray, a_values: np.ndarray, step: float = 1e-6,
                          rtol: float = 1e-4) -> Dict[str, float]:
        """Compare the analytic derivatives with central differences on a grid.

        Args:
            y_values: Responses to check
            a_values: Linear predictor values to check
            step: Finite-difference step
            rtol: Relative tolerance

        Returns:
            dict: Worst relative error of ``dloss`` and ``d2loss`` and whether both pass
        """
        y, a = np.meshgrid(np.asarray(y_values, float), np.asarray(a_values, float), indexing="ij")
        fd_first = (self.loss(y, a + step) - self.loss(y, a - step)) / (2 * step)
        fd_second = (self.dloss(y, a + step) - self.dloss(y, a - step)) / (2 * step)
        first, second = self.dloss(y, a), self.d2loss(y, a)
        first_error = float(np.max(np.abs(fd_first - first) / np.maximum(np.abs(first), 1e-8)))
        second_error = float(np.max(np.abs(fd_second - second) / np.maximum(np.abs(second), 1e-8)))
        convex = bool(np.all(second >= 0))
        passed = first_error < rtol and second_error < rtol and convex
        if not passed:
            self.logger.warning(f"Derivative check failed for {self.name}: "
                                f"dloss error {first_error:.2e}, d2loss error {second_error:.2e}")
        return {"dloss_error": first_error, "d2loss_error": second_error, "convex": convex, "passed": passed}

    def validate_response(self, y: np.ndarray) -> Optional[str]:
        """Return a message when ``y`` is outside the loss's domain."""
        return None
