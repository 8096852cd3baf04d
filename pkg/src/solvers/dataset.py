from dataclasses import dataclass, replace
from typing import Optional, Sequence
import hashlib
import uuid

import numpy as np

from src.config import logger
from src.exceptions import ConstantColumn, DimensionMismatch, NonFinite

_CONSTANT_SD = 1e-12


@dataclass(frozen=True)
class Dataset:
    """Response ``Y`` and ``n x p`` design ``X`` with standardization bookkeeping.

    ``column_means`` and ``column_sds`` record the original column moments once
    the design has been standardized, so callers can map coefficients back to
    the original scale (``beta_original = beta / column_sds``).
    """

    X: np.ndarray
    Y: np.ndarray
    standardized: bool = False
    column_means: Optional[np.ndarray] = None
    column_sds: Optional[np.ndarray] = None
    y_mean: float = 0.0

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        Y = np.asarray(self.Y, dtype=np.float64).reshape(-1)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise DimensionMismatch(f"X must be a matrix, got {X.ndim} dimensions")
        if X.shape[0] != Y.shape[0]:
            raise DimensionMismatch(f"X has {X.shape[0]} rows but Y has {Y.shape[0]} entries",
                                    x_rows=int(X.shape[0]), y_rows=int(Y.shape[0]))
        if X.shape[0] < 2 or X.shape[1] < 1:
            raise DimensionMismatch(f"Need n >= 2 and p >= 1, got X of shape {X.shape}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise NonFinite("X and Y must not contain NaN or Inf")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n(self) -> int:
        return int(self.X.shape[0])

    @property
    def p(self) -> int:
        return int(self.X.shape[1])

    def with_response(self, Y: np.ndarray) -> "Dataset":
        """Same design, new response (centered when the design is standardized)."""
        Y = np.asarray(Y, dtype=np.float64).reshape(-1)
        if self.standardized:
            y_mean = float(Y.mean())
            return replace(self, Y=Y - y_mean, y_mean=y_mean)
        return replace(self, Y=Y)

    def subset_rows(self, rows: Sequence[int]) -> "Dataset":
        """Rows ``rows`` as a fresh, unstandardized dataset."""
        rows = np.asarray(rows, dtype=np.intp)
        return Dataset(X=self.X[rows], Y=self.Y[rows])

    def subset_columns(self, columns: Sequence[int]) -> "Dataset":
        """Columns ``columns`` keeping the response and the standardization metadata."""
        columns = np.asarray(columns, dtype=np.intp)
        return replace(
            self,
            X=self.X[:, columns],
            column_means=None if self.column_means is None else self.column_means[columns],
            column_sds=None if self.column_sds is None else self.column_sds[columns],
        )

    def fingerprint(self, include_response: bool = False) -> str:
        """Deterministic UUID of the design (and optionally the response) contents."""
        digest = hashlib.md5()
        digest.update(np.ascontiguousarray(self.X).tobytes())
        digest.update(str(self.X.shape).encode())
        if include_response:
            digest.update(np.ascontiguousarray(self.Y).tobytes())
        return str(uuid.UUID(digest.hexdigest()))


def standardize(dataset: Dataset) -> Dataset:
    """Center and scale every column of ``X`` to mean 0, sd 1; center ``Y``.

    The sample standard deviation uses the ``1/n`` normalization so that
    ``||X_j||_2^2 / n = 1`` after standardization. ``Y`` is centered but not
    rescaled.

    Args:
        dataset: Input data

    Returns:
        Dataset: New standardized dataset with the original moments recorded

    Raises:
        ConstantColumn: If a column has (numerically) zero variance
    """
    X = dataset.X
    means = X.mean(axis=0)
    centered = X - means
    sds = np.sqrt((centered ** 2).mean(axis=0))
    constant = np.flatnonzero(sds <= _CONSTANT_SD)
    if constant.size:
        raise ConstantColumn(int(constant[0]))

    y_mean = float(dataset.Y.mean())
    # Compose with earlier metadata so repeated calls stay relative to the raw scale
    if dataset.standardized and dataset.column_means is not None:
        original_means = dataset.column_means + means * dataset.column_sds
        original_sds = dataset.column_sds * sds
        y_mean += dataset.y_mean
    else:
        original_means, original_sds = means, sds

    logger.debug(f"Standardized design with n={dataset.n}, p={dataset.p}")
    return Dataset(
        X=centered / sds,
        Y=dataset.Y - dataset.Y.mean(),
        standardized=True,
        column_means=original_means,
        column_sds=original_sds,
        y_mean=y_mean,
    )
