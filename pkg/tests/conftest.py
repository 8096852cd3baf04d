import numpy as np
import pytest

from src.solvers.dataset import Dataset, standardize
from src.storage.cache_client import CacheClient
from src.storage.dataset_io import write_matrix_csv


def make_linear_data(n, p, s0=3, rho=0.0, sigma=1.0, seed=0):
    """Gaussian design with Toeplitz correlation and ``beta = (1.5, -1, 0.75, ...)`` on the first ``s0`` columns."""
    rng = np.random.default_rng(seed)
    cov = rho ** np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    X = rng.standard_normal((n, p)) @ np.linalg.cholesky(cov).T
    beta = np.zeros(p)
    beta[:s0] = [1.5, -1.0, 0.75, 2.0, -0.5][:s0]
    Y = X @ beta + sigma * rng.standard_normal(n)
    return Dataset(X=X, Y=Y), beta


@pytest.fixture
def small_data():
    """Low-dimensional standardized data, n=120, p=6."""
    data, _ = make_linear_data(120, 6, s0=2, rho=0.3, seed=1)
    return standardize(data)


@pytest.fixture
def hd_data():
    """High-dimensional standardized data, n=60, p=90."""
    data, _ = make_linear_data(60, 90, s0=3, rho=0.5, seed=2)
    return standardize(data)


@pytest.fixture
def cache(tmp_path):
    return CacheClient(str(tmp_path / "cache"))


@pytest.fixture
def csv_data(tmp_path):
    """Paths of a small X/Y pair on disk, n=50, p=12."""
    data, _ = make_linear_data(50, 12, s0=2, rho=0.4, seed=3)
    x_path = tmp_path / "X.csv"
    y_path = tmp_path / "Y.csv"
    write_matrix_csv(x_path, data.X)
    write_matrix_csv(y_path, data.Y)
    return str(x_path), str(y_path)
