import numpy as np
import pytest

from src.desparsify.estimator import desparsified_lasso, desparsify, remainder_diagnostic, simultaneous_ci
from src.exceptions import DimensionMismatch
from src.nodewise.precision import PrecisionEstimate
from src.solvers.dataset import standardize
from src.solvers.lasso import lasso_fit
from tests.conftest import make_linear_data


def exact_inverse(data):
    gram = data.X.T @ data.X / data.n
    theta = np.linalg.inv(gram)
    p = data.p
    return PrecisionEstimate(theta=theta, tau_sq=1.0 / np.diag(theta), lambdas=np.zeros(p),
                             gamma=np.zeros((p, p - 1)))


def test_exact_inverse_gives_least_squares(small_data):
    fit = desparsify(small_data, lasso_fit(small_data, 0.2), exact_inverse(small_data), 1.0)
    ols = np.linalg.lstsq(small_data.X, small_data.Y, rcond=None)[0]
    np.testing.assert_allclose(fit.beta_breve, ols, atol=1e-10)


def test_exact_inverse_has_no_remainder(small_data):
    fit = desparsify(small_data, lasso_fit(small_data, 0.2), exact_inverse(small_data), 1.0)
    diagnostic = remainder_diagnostic(fit, np.array([1.0, -1.0, 0, 0, 0, 0]))
    np.testing.assert_allclose(diagnostic.delta, 0.0, atol=1e-9)
    assert fit.delta is diagnostic.delta


def test_omega_formula(hd_data):
    fit = desparsified_lasso(hd_data, nodewise_lambda=0.2, threads=1)
    theta = fit.precision.theta
    gram = hd_data.X.T @ hd_data.X / hd_data.n
    expected = fit.sigma_eps_sq * np.einsum("jk,kl,jl->j", theta, gram, theta)
    np.testing.assert_allclose(fit.omega_diag, expected, rtol=1e-10)
    assert fit.sigma_eps_sq == pytest.approx(fit.noise.sigma_hat_modified ** 2)


def test_remainder_identity(hd_data):
    fit = desparsified_lasso(hd_data, nodewise_lambda=0.2, threads=1)
    beta_true = np.zeros(hd_data.p)
    beta_true[:3] = [1.5, -1.0, 0.75]
    diagnostic = remainder_diagnostic(fit, beta_true * hd_data.column_sds)
    assert diagnostic.identity_error < 1e-8
    assert diagnostic.max_active >= 0 and diagnostic.max_inactive >= 0
    np.testing.assert_allclose(diagnostic.delta_star, diagnostic.delta / np.sqrt(fit.omega_diag))


def test_unmodified_variance_option(hd_data):
    modified = desparsified_lasso(hd_data, nodewise_lambda=0.2, threads=1)
    plain = desparsified_lasso(hd_data, nodewise_lambda=0.2, modified_variance=False,
                               precision=modified.precision)
    assert plain.sigma_eps_sq == pytest.approx(plain.noise.sigma_hat ** 2)
    np.testing.assert_allclose(plain.beta_breve, modified.beta_breve)


def test_desparsify_dimension_checks(small_data, hd_data):
    with pytest.raises(DimensionMismatch):
        desparsify(small_data, lasso_fit(hd_data, 0.2), exact_inverse(small_data), 1.0)


def test_simultaneous_ci_half_widths(hd_data):
    fit = desparsified_lasso(hd_data, nodewise_lambda=0.2, threads=1)
    group = np.array([0, 5, 9])
    plain = simultaneous_ci(fit, group, 2.5, studentized=False)
    np.testing.assert_allclose(plain.widths, 2 * 2.5 / np.sqrt(hd_data.n))
    studentized = simultaneous_ci(fit, group, 2.5, studentized=True)
    np.testing.assert_allclose(studentized.widths, 2 * 2.5 * np.sqrt(fit.omega_diag[group] / hd_data.n))
    assert studentized.covers(fit.beta_breve)
    shifted = fit.beta_breve.copy()
    shifted[5] += 10.0
    assert not studentized.covers(shifted)


def test_end_to_end_close_to_truth():
    data, beta = make_linear_data(200, 40, s0=3, rho=0.3, sigma=0.5, seed=21)
    data = standardize(data)
    fit = desparsified_lasso(data, cv_seed=1, threads=1)
    truth = beta * data.column_sds
    assert np.max(np.abs(fit.beta_breve - truth)) < 0.4
    assert np.all(fit.omega_diag > 0)
    assert fit.scores.shape == (data.n, data.p)
