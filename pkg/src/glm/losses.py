from typing import Optional

import numpy as np
from scipy.special import expit

from .base_loss import LossSpec


class LogisticLoss(LossSpec):
    """``L(y, a) = -y a + log(1 + e^a)`` for ``y`` in {0, 1}."""

    name = "logistic"
    curvature_bound = 0.25

    def loss(self, y, a):
        return np.logaddexp(0.0, a) - y * a

    def dloss(self, y, a):
        return expit(a) - y

    def d2loss(self, y, a):
        # expit(a) * expit(-a) stays accurate in both tails
        a = np.asarray(a, dtype=np.float64)
        return expit(a) * expit(-a)

    def validate_response(self, y: np.ndarray) -> Optional[str]:
        if not np.all(np.isin(y, (0.0, 1.0))):
            return "logistic loss needs responses in {0, 1}"
        return None


class SquaredLoss(LossSpec):
    """``L(y, a) = (y - a)^2 / 2``; with the l1 penalty this is the linear-model Lasso."""

    name = "squared"
    curvature_bound = 1.0

    def loss(self, y, a):
        return 0.5 * (y - a) ** 2

    def dloss(self, y, a):
        return a - y

    def d2loss(self, y, a):
        return np.ones(np.broadcast(np.asarray(y), np.asarray(a)).shape)


def logistic_loss() -> LossSpec:
    return LogisticLoss()


def squared_loss() -> LossSpec:
    return SquaredLoss()


LOSSES = {"logistic": logistic_loss, "squared": squared_loss}


def get_loss(name: str) -> LossSpec:
    try:
        return LOSSES[name]()
    except KeyError:
        raise ValueError(f"Unknown loss {name!r}; expected one of {sorted(LOSSES)}")
