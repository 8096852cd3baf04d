from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Optional

import numpy as np

from src.bootstrap.distribution import Variant
from src.bootstrap.multiplier import MultiplierBootstrap
from src.bootstrap.testing import resolve_null, simultaneous_test
from src.config import logger
from src.desparsify.estimator import DesparsifiedFit, desparsified_lasso
from src.solvers.dataset import Dataset, standardize
from src.utils.groups import as_group
from src.utils.rng import derive_seed

from .screening import iterative_screen, marginal_screen, screen_size, split_sample

SCREEN_MODES = ("marginal", "iterative")


@dataclass
class ThreeStepResult:
    reject: bool
    statistic: float
    critical: Optional[float]
    p_value: float
    reduced_group: np.ndarray
    screened: np.ndarray
    screen_rows: np.ndarray
    test_rows: np.ndarray

    def to_dict(self, one_based: bool = False) -> Dict[str, Any]:
        offset = 1 if one_based else 0
        return {
            "method": "three-step",
            "reject": bool(self.reject),
            "statistic": float(self.statistic),
            "critical": None if self.critical is None else float(self.critical),
            "p_value": float(self.p_value),
            "reduced_group": [int(j) + offset for j in self.reduced_group],
            "screened": [int(j) + offset for j in self.screened],
        }


def screen(dataset: Dataset, k: int, mode: str = "marginal", k1: Optional[int] = None) -> np.ndarray:
    if mode == "marginal":
        return marginal_screen(dataset, k)
    if mode == "iterative":
        return iterative_screen(dataset, k, k1=k1)
    raise ValueError(f"Unknown screen mode {mode!r}; expected one of {SCREEN_MODES}")


@dataclass
class ScreenedModel:
    """Sample split, screened columns and (once fitted) the de-sparsified fit on D2."""

    dataset: Dataset = field(repr=False)
    screened: np.ndarray
    screen_rows: np.ndarray
    test_rows: np.ndarray
    seed: int
    fit: Optional[DesparsifiedFit] = field(default=None, repr=False)
    engine: Optional[MultiplierBootstrap] = field(default=None, repr=False)

    def reduce(self, candidates: np.ndarray) -> np.ndarray:
        """Positions inside ``screened`` of the candidates that survived screening."""
        return np.flatnonzero(np.isin(self.screened, candidates))

    def ensure_fit(self, B: Optional[int] = None, nodewise_lambda: Optional[float] = None,
                   threads: Optional[int] = None) -> DesparsifiedFit:
        """Refit on the D2 rows restricted to the screened columns (once)."""
        if self.fit is None:
            testing_data = standardize(self.dataset.subset_rows(self.test_rows).subset_columns(self.screened))
            self.fit = desparsified_lasso(testing_data, nodewise_lambda=nodewise_lambda,
                                          cv_seed=derive_seed(self.seed, 2), threads=threads)
            self.engine = MultiplierBootstrap.from_fit(self.fit, B=B, seed=derive_seed(self.seed, 1),
                                                       threads=threads)
        return self.fit


def split_and_screen(dataset: Dataset, c0: float, screen_mode: str = "marginal", seed: int = 0,
                     size_rule: str = "d2_minus_one", k1: Optional[int] = None) -> ScreenedModel:
    """Steps one and two: split the rows and screen columns using the D1 rows only."""
    screen_rows, test_rows = split_sample(dataset.n, c0, derive_seed(seed, 0))
    screening_data = standardize(dataset.subset_rows(screen_rows))
    k = screen_size(test_rows.size, size_rule)
    screened = screen(screening_data, k, mode=screen_mode, k1=k1)
    logger.debug(f"Screened {screened.size} of {dataset.p} columns on {screen_rows.size} rows")
    return ScreenedModel(dataset=dataset, screened=screened, screen_rows=screen_rows,
                         test_rows=test_rows, seed=int(seed))


def screened_test(model: ScreenedModel, candidates: Optional[Iterable[int]], alpha: float,
                  studentized: bool = False, beta_tilde=None, B: Optional[int] = None,
                  nodewise_lambda: Optional[float] = None, threads: Optional[int] = None) -> ThreeStepResult:
    """Step three on an already screened model; the refit is shared across calls."""
    p = model.dataset.p
    candidates = as_group(candidates, p)
    beta_tilde = resolve_null(beta_tilde, p)
    reduced = model.reduce(candidates)
    if reduced.size == 0:
        logger.info("No hypothesis survived screening; statistic set to 0")
        return ThreeStepResult(reject=False, statistic=0.0, critical=None, p_value=1.0,
                               reduced_group=reduced, screened=model.screened,
                               screen_rows=model.screen_rows, test_rows=model.test_rows)

    fit = model.ensure_fit(B=B, nodewise_lambda=nodewise_lambda, threads=threads)
    dist = model.engine.distribution(reduced, Variant.from_flags(studentized, two_sided=True))
    result = simultaneous_test(fit, beta_tilde[model.screened], reduced, dist, alpha)
    return ThreeStepResult(reject=result.reject, statistic=result.statistic, critical=result.critical,
                           p_value=result.p_value, reduced_group=model.screened[reduced],
                           screened=model.screened, screen_rows=model.screen_rows, test_rows=model.test_rows)


def three_step_test(dataset: Dataset, candidates: Optional[Iterable[int]], alpha: float, c0: float,
                    screen_mode: str = "marginal", studentized: bool = False, B: Optional[int] = None,
                    seed: int = 0, beta_tilde=None, size_rule: str = "d2_minus_one",
                    k1: Optional[int] = None, nodewise_lambda: Optional[float] = None,
                    threads: Optional[int] = None) -> ThreeStepResult:
    """
    Split the sample, screen on the first part and test on the second.

    Screening only sees the rows of D1; the reduced model is refitted and tested
    on the rows of D2 alone, each part standardized on its own.

    Args:
        dataset: Raw (unstandardized) data
        candidates: Hypothesis group ``G_tilde`` (None for all)
        alpha: Level
        c0: Fraction of rows used for screening
        screen_mode: ``marginal`` or ``iterative``
        studentized: Use the studentized statistic
        B: Bootstrap draws
        seed: Master seed of the split, the CV folds and the bootstrap
        beta_tilde: Hypothesised coefficients on the full index set (None for zero)
        size_rule: Screened model size rule (``d2_minus_one`` or ``d2_over_log``)
        k1: Lasso-stage size for iterative screening
        nodewise_lambda: Shared nodewise penalty for the reduced model (None selects by CV)

    Returns:
        ThreeStepResult with the group in full-model indices
    """
    model = split_and_screen(dataset, c0, screen_mode=screen_mode, seed=seed, size_rule=size_rule, k1=k1)
    result = screened_test(model, candidates, alpha, studentized=studentized, beta_tilde=beta_tilde, B=B,
                           nodewise_lambda=nodewise_lambda, threads=threads)
    if result.critical is not None:
        logger.info(f"Three-step test on {result.reduced_group.size} screened hypotheses: "
                    f"statistic={result.statistic:.4g}, critical={result.critical:.4g}, reject={result.reject}")
    return result
