from typing import Callable, List, Optional, Sequence

import numpy as np

from src.config import settings, logger
from src.solvers.dataset import Dataset
from src.solvers.lasso import LassoProblem

PathSolver = Callable[[float, Optional[np.ndarray]], np.ndarray]


def fold_partition(n: int, folds: int, seed: int) -> List[np.ndarray]:
    """Seeded random partition of ``range(n)`` into ``folds`` near-equal blocks."""
    if folds < 2:
        raise ValueError(f"folds must be at least 2, got {folds}")
    if folds > n:
        raise ValueError(f"cannot split {n} observations into {folds} folds")
    permutation = np.random.default_rng(seed).permutation(n)
    return [np.sort(block) for block in np.array_split(permutation, folds)]


def lambda_grid(lambda_max: float, size: Optional[int] = None, ratio: Optional[float] = None) -> np.ndarray:
    """Descending log-spaced grid from ``lambda_max`` to ``ratio * lambda_max``."""
    size = settings.CV_GRID_SIZE if size is None else size
    ratio = settings.CV_GRID_RATIO if ratio is None else ratio
    if lambda_max <= 0:
        raise ValueError(f"lambda_max must be positive, got {lambda_max}")
    if size == 1:
        return np.array([float(lambda_max)])
    return np.geomspace(lambda_max, lambda_max * ratio, size)


def validate_grid(grid: Sequence[float]) -> np.ndarray:
    grid = np.asarray(grid, dtype=np.float64).reshape(-1)
    if grid.size == 0:
        raise ValueError("lambda grid is empty")
    if np.any(grid <= 0):
        raise ValueError("lambda grid must be positive")
    if np.any(np.diff(grid) > 0):
        raise ValueError("lambda grid must be sorted in descending order")
    return grid


def path_sse(solve: PathSolver, X_test: np.ndarray, y_test: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Held-out sum of squared errors along a warm-started descending path.

    Args:
        solve: ``solve(lam, warm_start) -> beta`` fitted on the training rows
        X_test: Held-out design rows
        y_test: Held-out responses
        grid: Descending penalties

    Returns:
        Array of held-out SSE, one per grid value
    """
    sse = np.empty(len(grid))
    beta = None
    for i, lam in enumerate(grid):
        beta = solve(float(lam), beta)
        resid = y_test - X_test @ beta
        sse[i] = resid @ resid
    return sse


def cv_error_curve(dataset: Dataset, grid: Sequence[float], folds: Optional[int] = None,
                   seed: int = 0) -> np.ndarray:
    """Out-of-fold mean squared prediction error of the Lasso for every grid value."""
    grid = validate_grid(grid)
    folds = settings.CV_FOLDS if folds is None else folds
    total = np.zeros(len(grid))
    for test_rows in fold_partition(dataset.n, folds, seed):
        train_mask = np.ones(dataset.n, dtype=bool)
        train_mask[test_rows] = False
        problem = LassoProblem(dataset.X[train_mask], dataset.Y[train_mask])
        total += path_sse(lambda lam, warm: problem.fit(lam, warm_start=warm).beta,
                          dataset.X[test_rows], dataset.Y[test_rows], grid)
    return total / dataset.n


def select_from_curve(grid: np.ndarray, curve: np.ndarray) -> float:
    """Minimizer of ``curve``; the first (largest) penalty wins ties."""
    return float(grid[int(np.argmin(curve))])


def cv_lambda(dataset: Dataset, grid: Sequence[float], folds: Optional[int] = None, seed: int = 0) -> float:
    """Penalty minimizing the K-fold cross-validated prediction error of ``lasso_fit``.

    Args:
        dataset: Data to cross-validate on
        grid: Candidate penalties, positive and sorted descending
        folds: Number of folds (defaults to settings.CV_FOLDS)
        seed: Seed of the fold assignment

    Returns:
        float: Selected penalty (ties go to the larger value)
    """
    grid = validate_grid(grid)
    if grid.size == 1:
        return float(grid[0])
    curve = cv_error_curve(dataset, grid, folds=folds, seed=seed)
    selected = select_from_curve(grid, curve)
    logger.debug(f"CV selected lambda={selected:.4g} from {grid.size} candidates")
    return selected
