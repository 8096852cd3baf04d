"""
Multiplier and empirical bootstrap for max-type statistics.

Replicate ``b`` always reads its own counter-based stream ``(seed, b)`` and
replicates are processed in fixed-size blocks, so the draws do not depend on
the number of worker threads.
"""

from typing import Iterable, Optional, Union

import numpy as np

from src.config import settings, logger
from src.exceptions import DimensionMismatch
from src.nodewise.precision import PrecisionEstimate
from src.solvers.dataset import Dataset
from src.utils.groups import as_group
from src.utils.parallel import ordered_map
from src.utils.rng import counter_stream, normal_block

from .distribution import BootstrapDistribution, Variant

_MIN_DRAWS = 100
_BLOCK = 64


class MultiplierBootstrap:
    """
    Replicated score sums ``S[b, j] = sum_i M[i, j] e_bi / sqrt(n)`` for one shared multiplier stream.

    ``M`` already carries the noise scale (``sigma_eps`` in the linear model,
    ``L'(y_i, x_i^T beta)`` per observation for convex losses). Every group and
    variant is read off the same replicate matrix, so maxima over nested groups
    are ordered replicate by replicate.
    """

    def __init__(self, scores: np.ndarray, omega_diag: Optional[np.ndarray] = None,
                 B: Optional[int] = None, seed: int = 0, threads: Optional[int] = None):
        self.scores = np.asarray(scores, dtype=np.float64)
        if self.scores.ndim != 2:
            raise DimensionMismatch("Score matrix must be two-dimensional")
        self.n, self.m = self.scores.shape
        self.omega_diag = None if omega_diag is None else np.asarray(omega_diag, dtype=np.float64)
        if self.omega_diag is not None and self.omega_diag.shape != (self.m,):
            raise DimensionMismatch(f"omega_diag has shape {self.omega_diag.shape}, expected ({self.m},)")
        self.B = settings.BOOTSTRAP_DRAWS if B is None else int(B)
        if self.B < _MIN_DRAWS:
            raise ValueError(f"Need at least {_MIN_DRAWS} bootstrap draws, got {self.B}")
        self.seed = int(seed)
        self.threads = threads
        self._replicates: Optional[np.ndarray] = None

    @property
    def replicates(self) -> np.ndarray:
        """``B x m`` matrix of replicated (unstudentized) score sums."""
        if self._replicates is None:
            root_n = np.sqrt(self.n)

            def block(rows: range) -> np.ndarray:
                multipliers = normal_block(self.seed, rows, self.n)
                return multipliers @ self.scores / root_n

            blocks = [range(start, min(start + _BLOCK, self.B)) for start in range(0, self.B, _BLOCK)]
            self._replicates = np.vstack(ordered_map(block, blocks, threads=self.threads))
            logger.debug(f"Computed {self.B} multiplier replicates over {self.m} scores")
        return self._replicates

    def replicate_maxima(self, group: Optional[Iterable[int]], variant: Union[Variant, str]) -> np.ndarray:
        """Per-replicate maximum over ``group`` (unsorted, replicate order)."""
        variant = Variant(variant)
        group = as_group(group, self.m)
        values = self.replicates[:, group]
        if variant.studentized:
            if self.omega_diag is None:
                raise ValueError("Studentized variants need omega_diag")
            values = values / np.sqrt(self.omega_diag[group])
        if variant.two_sided:
            values = np.abs(values)
        return values.max(axis=1)

    def distribution(self, group: Optional[Iterable[int]], variant: Union[Variant, str]) -> BootstrapDistribution:
        group = as_group(group, self.m)
        return BootstrapDistribution(draws=self.replicate_maxima(group, variant), variant=Variant(variant),
                                     group=group, seed=self.seed)

    @classmethod
    def from_fit(cls, fit, B: Optional[int] = None, seed: int = 0,
                 threads: Optional[int] = None) -> "MultiplierBootstrap":
        """Bootstrap over all ``p`` coefficients of a linear-model de-sparsified fit."""
        return cls(fit.scores * fit.sigma_eps, omega_diag=fit.omega_diag, B=B, seed=seed, threads=threads)


def multiplier_bootstrap(precision: PrecisionEstimate, dataset: Dataset, sigma_eps: float,
                         omega_diag: Optional[np.ndarray], group: Optional[Iterable[int]],
                         variant: Union[Variant, str], B: Optional[int] = None, seed: int = 0,
                         threads: Optional[int] = None) -> BootstrapDistribution:
    """
    Multiplier bootstrap distribution of a max-type statistic over ``group``.

    Args:
        precision: Nodewise precision estimate
        dataset: Data the fit was computed on
        sigma_eps: Noise standard deviation
        omega_diag: Variances ``omega_jj`` for all ``p`` coefficients (studentized variants)
        group: Coefficient indices (None for all)
        variant: Which statistic
        B: Number of draws (defaults to settings.BOOTSTRAP_DRAWS)
        seed: Stream seed

    Returns:
        BootstrapDistribution
    """
    group = as_group(group, dataset.p)
    scores = dataset.X @ precision.theta[group].T * sigma_eps
    omega = None if omega_diag is None else np.asarray(omega_diag)[group]
    engine = MultiplierBootstrap(scores, omega_diag=omega, B=B, seed=seed, threads=threads)
    dist = engine.distribution(None, variant)
    dist.group = group
    return dist


def empirical_draws(h: np.ndarray, B: Optional[int] = None, seed: int = 0,
                    threads: Optional[int] = None) -> np.ndarray:
    """Draws ``max_j |sum_i (h*_ij - mean_j)| / sqrt(n)`` over rows resampled with replacement."""
    B = settings.BOOTSTRAP_DRAWS if B is None else int(B)
    if B < _MIN_DRAWS:
        raise ValueError(f"Need at least {_MIN_DRAWS} bootstrap draws, got {B}")
    h = np.asarray(h, dtype=np.float64)
    n = h.shape[0]
    centred = h - h.mean(axis=0)
    root_n = np.sqrt(n)

    def block(rows: range) -> np.ndarray:
        out = np.empty(len(rows))
        for k, b in enumerate(rows):
            picks = counter_stream(seed, b).integers(0, n, size=n)
            out[k] = np.abs(centred[picks].sum(axis=0) / root_n).max()
        return out

    blocks = [range(start, min(start + _BLOCK, B)) for start in range(0, B, _BLOCK)]
    return np.concatenate(ordered_map(block, blocks, threads=threads))


def empirical_bootstrap(precision: PrecisionEstimate, dataset: Dataset, sigma_eps: float,
                        group: Optional[Iterable[int]], B: Optional[int] = None, seed: int = 0,
                        threads: Optional[int] = None) -> BootstrapDistribution:
    """
    Efron's bootstrap of the two-sided non-studentized max statistic.

    Rows ``h_i = sigma_eps * (Theta_j^T x_i)_{j in G}`` are resampled with
    replacement and centred at the original column means.
    """
    group = as_group(group, dataset.p)
    h = dataset.X @ precision.theta[group].T * sigma_eps
    draws = empirical_draws(h, B=B, seed=seed, threads=threads)
    return BootstrapDistribution(draws=draws, variant=Variant.NST_TWO_SIDED, group=group, seed=int(seed),
                                 kind="empirical")
