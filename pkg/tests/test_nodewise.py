import numpy as np
import pytest

from src.exceptions import DegenerateTau, DimensionMismatch, PrecisionEstimateError
from src.nodewise import precision as precision_module
from src.nodewise.precision import nodewise_regression, precision_cache_key, precision_estimate
from src.nodewise.tuning import cv_columns, nodewise_lambda_max, shared_cv_lambda_nodewise
from src.solvers.dataset import Dataset
from src.solvers.lasso import lasso_fit


def test_nodewise_regression_matches_lasso(hd_data):
    j, lam = 4, 0.15
    gamma, tau_sq = nodewise_regression(hd_data, j, lam)
    others = np.delete(np.arange(hd_data.p), j)
    reference = lasso_fit(Dataset(X=hd_data.X[:, others], Y=hd_data.X[:, j]), lam)
    np.testing.assert_allclose(gamma, reference.beta, atol=1e-6)
    resid = hd_data.X[:, j] - hd_data.X[:, others] @ gamma
    assert tau_sq == pytest.approx(resid @ resid / hd_data.n + lam * np.abs(gamma).sum())


def test_theta_rows_built_from_gamma_and_tau(hd_data):
    estimate = precision_estimate(hd_data, 0.2, threads=1)
    j = 7
    np.testing.assert_allclose(estimate.theta[j, j], 1.0 / estimate.tau_sq[j])
    expected = -estimate.gamma_full(j) / estimate.tau_sq[j]
    expected[j] = 1.0 / estimate.tau_sq[j]
    np.testing.assert_allclose(estimate.theta[j], expected)


def test_precision_kkt_bounds(hd_data):
    lam = 0.2
    estimate = precision_estimate(hd_data, lam, threads=1)
    gram = hd_data.X.T @ hd_data.X / hd_data.n
    product = estimate.theta @ gram
    # the diagonal of Theta Sigma_hat is one at the nodewise solution
    assert np.max(estimate.diagonal_gap(gram)) < 1e-6
    off_diagonal = np.abs(product - np.eye(hd_data.p))
    assert np.all(off_diagonal.max(axis=1) <= lam / estimate.tau_sq + 1e-6)


def test_small_penalty_recovers_inverse():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((200, 5))
    data = Dataset(X=X, Y=np.zeros(200))
    estimate = precision_estimate(data, 1e-9, threads=1)
    inverse = np.linalg.inv(X.T @ X / 200)
    np.testing.assert_allclose(estimate.theta, inverse, rtol=1e-5, atol=1e-6)


def test_precision_independent_of_threads(hd_data):
    single = precision_estimate(hd_data, 0.2, threads=1)
    pooled = precision_estimate(hd_data, 0.2, threads=4)
    np.testing.assert_array_equal(single.theta, pooled.theta)


def test_precision_cache_hit(hd_data, cache, monkeypatch):
    first = precision_estimate(hd_data, 0.2, cache=cache, threads=1)
    assert cache.list_entries("precision") == [precision_cache_key(hd_data, first.lambdas)]

    def fail(*args, **kwargs):
        raise AssertionError("nodewise regression ran despite a cached estimate")

    monkeypatch.setattr(precision_module, "nodewise_regression", fail)
    second = precision_estimate(hd_data, 0.2, cache=cache, threads=1)
    np.testing.assert_array_equal(first.theta, second.theta)


def test_precision_collects_column_failures(small_data, monkeypatch):
    real = precision_module.nodewise_regression

    def flaky(dataset, j, lambda_j, gram=None):
        if j in (1, 3):
            raise DegenerateTau(j, 0.0)
        return real(dataset, j, lambda_j, gram=gram)

    monkeypatch.setattr(precision_module, "nodewise_regression", flaky)
    with pytest.raises(PrecisionEstimateError) as excinfo:
        precision_estimate(small_data, 0.1, threads=1)
    assert sorted(excinfo.value.errors) == [1, 3]


def test_precision_penalty_shape_checked(small_data):
    with pytest.raises(DimensionMismatch):
        precision_estimate(small_data, [0.1, 0.2])
    with pytest.raises(ValueError):
        precision_estimate(small_data, -0.1)


def test_nodewise_lambda_max_zeroes_every_fit(hd_data):
    lam = nodewise_lambda_max(hd_data.X) * 1.0001
    estimate = precision_estimate(hd_data, lam, threads=1)
    assert not np.any(estimate.gamma)


def test_cv_columns_subsample():
    np.testing.assert_array_equal(cv_columns(20, 50, seed=0), np.arange(20))
    picked = cv_columns(200, 30, seed=0)
    assert picked.size == 30
    assert np.all(np.diff(picked) > 0)
    np.testing.assert_array_equal(picked, cv_columns(200, 30, seed=0))


def test_shared_cv_lambda_deterministic(hd_data):
    grid = np.geomspace(nodewise_lambda_max(hd_data.X), 0.01, 12)
    chosen = shared_cv_lambda_nodewise(hd_data, grid=grid, folds=5, seed=3, subsample=20, threads=1)
    assert chosen in grid
    assert chosen == shared_cv_lambda_nodewise(hd_data, grid=grid, folds=5, seed=3, subsample=20, threads=4)


def test_orthogonal_columns_give_diagonal_precision():
    signs = np.array([[1, 1, 1], [1, 1, -1], [1, -1, 1], [1, -1, -1],
                      [-1, 1, 1], [-1, 1, -1], [-1, -1, 1], [-1, -1, -1]], dtype=float)
    data = Dataset(X=signs, Y=np.zeros(8))
    estimate = precision_estimate(data, 0.1, threads=1)
    np.testing.assert_array_equal(estimate.gamma, 0.0)
    np.testing.assert_allclose(estimate.tau_sq, 1.0)
    np.testing.assert_allclose(estimate.theta, np.eye(3))
