import numpy as np
import pytest
from scipy.special import expit

from src.exceptions import NonPositiveWeight
from src.glm.bootstrap import glm_bootstrap
from src.glm.estimator import (
    glm_desparsified,
    glm_desparsify,
    glm_lasso_fit,
    glm_precision,
    standardize_design,
    stationarity_residual,
    weighted_design,
)
from src.glm.losses import LogisticLoss, get_loss, logistic_loss, squared_loss
from src.solvers.dataset import Dataset
from src.solvers.lasso import lasso_fit


def logistic_data(n=300, p=4, seed=0, beta=(1.0, -0.5)):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    coefficients = np.zeros(p)
    coefficients[:len(beta)] = beta
    Y = (rng.random(n) < expit(X @ coefficients)).astype(float)
    return standardize_design(Dataset(X=X, Y=Y))


@pytest.mark.parametrize("loss", [logistic_loss(), squared_loss()])
def test_derivative_checks_pass(loss):
    report = loss.check_derivatives(np.array([0.0, 1.0]), np.linspace(-6, 6, 25))
    assert report["passed"]
    assert report["convex"]


def test_logistic_curvature_stable_in_tails():
    loss = LogisticLoss()
    curvature = loss.d2loss(np.zeros(3), np.array([-40.0, 0.0, 40.0]))
    assert np.all(np.isfinite(curvature))
    assert np.all(curvature > 0)
    assert curvature[1] == pytest.approx(0.25)
    assert np.isfinite(loss.loss(np.array([1.0]), np.array([800.0]))).all()


def test_get_loss_unknown():
    assert get_loss("logistic").name == "logistic"
    with pytest.raises(ValueError):
        get_loss("hinge")


def test_logistic_rejects_non_binary_response():
    data = Dataset(X=np.eye(3), Y=np.array([0.0, 1.0, 2.0]))
    with pytest.raises(ValueError):
        glm_lasso_fit(data, logistic_loss(), 0.1)


def test_squared_loss_matches_lasso(hd_data):
    glm_fit = glm_lasso_fit(hd_data, squared_loss(), 0.1, tol=1e-8, max_iter=50_000)
    reference = lasso_fit(hd_data, 0.1)
    np.testing.assert_allclose(glm_fit.beta, reference.beta, atol=1e-4)


def test_logistic_fit_is_stationary():
    data = logistic_data()
    loss = logistic_loss()
    fit = glm_lasso_fit(data, loss, 0.02)
    assert fit.converged
    gradient = loss.gradient(data.X, data.Y, fit.beta)
    assert stationarity_residual(gradient, fit.beta, 0.02) < 1e-6
    assert np.all(np.diff(fit.objective_path) <= 1e-12)


def test_unpenalized_mle_is_a_fixed_point():
    data = logistic_data(n=400, p=3, seed=2)
    loss = logistic_loss()
    mle = glm_lasso_fit(data, loss, 0.0, tol=1e-10)
    assert mle.converged
    precision = glm_precision(data, mle.beta, loss, lambdas=0.05)
    fit = glm_desparsify(data, mle.beta, precision, loss)
    np.testing.assert_allclose(fit.beta_breve, mle.beta, atol=1e-6)


def test_weighted_design_rejects_zero_curvature():
    data = logistic_data(n=50, p=2)
    with pytest.raises(NonPositiveWeight):
        weighted_design(data, np.array([1000.0, 0.0]), logistic_loss())


def test_weighted_design_rows():
    data = logistic_data(n=50, p=3)
    beta = np.array([0.4, 0.0, -0.2])
    weighted = weighted_design(data, beta, logistic_loss())
    probabilities = expit(data.X @ beta)
    np.testing.assert_allclose(weighted.X, np.sqrt(probabilities * (1 - probabilities))[:, None] * data.X)


def test_glm_bootstrap_and_variances():
    data = logistic_data(n=300, p=10, seed=4)
    fit = glm_desparsified(data, logistic_loss(), nodewise_lambda=0.1, threads=1)
    scores = fit.bootstrap_scores()
    np.testing.assert_allclose(fit.w_diag, (scores ** 2).mean(axis=0))
    dist = glm_bootstrap(fit, [0, 1, 2], B=200, seed=1, studentized=True)
    assert dist.B == 200
    np.testing.assert_array_equal(dist.group, [0, 1, 2])
    again = glm_bootstrap(fit, [0, 1, 2], B=200, seed=1, studentized=True, threads=3)
    np.testing.assert_array_equal(dist.draws, again.draws)


def test_standardize_design_keeps_response():
    rng = np.random.default_rng(0)
    Y = (rng.random(30) < 0.5).astype(float)
    data = standardize_design(Dataset(X=rng.standard_normal((30, 2)), Y=Y))
    np.testing.assert_array_equal(data.Y, Y)
    assert data.standardized
