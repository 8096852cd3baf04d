from typing import Optional, Sequence, Tuple

import numpy as np

from src.config import settings, logger
from src.solvers.cross_validation import fold_partition, lambda_grid, path_sse, select_from_curve, validate_grid
from src.solvers.dataset import Dataset
from src.solvers.lasso import LassoProblem, solve_lasso_gram
from src.utils.parallel import ordered_map
from src.utils.rng import derive_seed


def nodewise_lambda_max(X: np.ndarray) -> float:
    """``max_{j, k != j} |X_k^T X_j| / n``, the smallest penalty zeroing every nodewise fit."""
    gram = X.T @ X / X.shape[0]
    np.fill_diagonal(gram, 0.0)
    return float(np.abs(gram).max())


def nodewise_grid(dataset: Dataset, size: Optional[int] = None, ratio: Optional[float] = None) -> np.ndarray:
    return lambda_grid(nodewise_lambda_max(dataset.X), size=size, ratio=ratio)


def cv_columns(p: int, subsample: Optional[int], seed: int) -> np.ndarray:
    """Columns whose CV curves enter the average: all of them, or a seeded subsample."""
    m = settings.NODEWISE_CV_SUBSAMPLE if subsample is None else subsample
    m = min(p, max(1, int(m)))
    if m == p:
        return np.arange(p)
    rng = np.random.default_rng(derive_seed(seed, 1))
    return np.sort(rng.choice(p, size=m, replace=False))


def nodewise_cv_curves(dataset: Dataset, grid: Optional[Sequence[float]] = None, folds: Optional[int] = None,
                       seed: int = 0, subsample: Optional[int] = None,
                       threads: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Per-column out-of-fold error curves of the nodewise regressions.

    Every column shares the fold partition and the penalty grid.

    Returns:
        Tuple of (grid, columns, curves) where ``curves[i]`` is the mean squared
        held-out error of the regression of column ``columns[i]``
    """
    X = dataset.X
    n, p = X.shape
    grid = nodewise_grid(dataset) if grid is None else validate_grid(grid)
    folds = settings.CV_FOLDS if folds is None else folds
    columns = cv_columns(p, subsample, seed)
    partition = fold_partition(n, folds, seed)

    def column_curve(j: int) -> np.ndarray:
        others = np.concatenate([np.arange(j), np.arange(j + 1, p)])
        total = np.zeros(len(grid))
        for test_rows, train_rows, gram in fold_statistics:
            X_test = X[test_rows]
            if gram is not None:
                sub_gram = gram[np.ix_(others, others)]
                xty, yty = gram[others, j], float(gram[j, j])

                def solve(lam, warm):
                    return solve_lasso_gram(sub_gram, xty, yty, lam, warm_start=warm).beta
            else:
                problem = LassoProblem(X[train_rows][:, others], X[train_rows, j])

                def solve(lam, warm):
                    return problem.fit(lam, warm_start=warm).beta
            total += path_sse(solve, X_test[:, others], X_test[:, j], grid)
        return total / n

    fold_statistics = []
    for test_rows in partition:
        train_rows = np.setdiff1d(np.arange(n), test_rows)
        X_train = X[train_rows]
        gram = X_train.T @ X_train / len(train_rows) if p <= settings.GRAM_MAX_P else None
        fold_statistics.append((test_rows, train_rows, gram))

    curves = np.vstack(ordered_map(column_curve, columns, threads=threads))
    return grid, columns, curves


def shared_cv_lambda_nodewise(dataset: Dataset, grid: Optional[Sequence[float]] = None,
                              folds: Optional[int] = None, seed: int = 0,
                              subsample: Optional[int] = None, threads: Optional[int] = None) -> float:
    """
    One penalty for all nodewise regressions, chosen by K-fold CV.

    The out-of-fold error curves of the sampled columns are averaged and the
    minimizer of the average is returned (ties go to the larger penalty).

    Args:
        dataset: Standardized data
        grid: Descending candidate penalties (defaults to the nodewise grid)
        folds: Number of folds (defaults to settings.CV_FOLDS)
        seed: Seed of the fold assignment and of the column subsample
        subsample: Number of columns to average over (defaults to settings.NODEWISE_CV_SUBSAMPLE)
        threads: Worker threads for the column loop

    Returns:
        float: Selected penalty
    """
    grid, columns, curves = nodewise_cv_curves(dataset, grid=grid, folds=folds, seed=seed,
                                               subsample=subsample, threads=threads)
    selected = select_from_curve(grid, curves.mean(axis=0))
    logger.info(f"Shared nodewise lambda {selected:.4g} from CV over {len(columns)} columns")
    return selected
