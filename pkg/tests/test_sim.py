import warnings
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.config import settings
from src.exceptions import HDInferError, InputNotFound, InvalidScenario, NotPositiveDefinite, ReplicationFailure
from src.sim import harness
from src.sim.generators import (
    covariance_factor,
    make_coefficients,
    make_covariance,
    sample_design,
    sample_errors,
)
from src.sim.harness import prepare_state, run_scenario, summarize
from src.sim.scenario import (
    CoefficientKind,
    CoefficientPattern,
    CovarianceKind,
    CovarianceSpec,
    ErrorDistribution,
    Task,
    load_scenario_config,
    scenario_config_from_mapping,
    scenario_config_to_mapping,
)

SCENARIO_DIR = Path(__file__).parent.parent / "scenarios"


def small_config(**overrides):
    values = {"name": "small", "n": 60, "p": 20, "s0": 2, "covariance": "toeplitz", "rho": 0.5,
              "error_dist": "gaussian", "coef_pattern": "unif_first", "coef_low": 1, "coef_high": 2,
              "reps": 3, "bootstrap_draws": 100, "nodewise_lambda": 0.3, "seed": 4, "master_seed": 7}
    values.update(overrides)
    return scenario_config_from_mapping(values)


# Generators

def test_toeplitz_covariance():
    sigma = make_covariance(CovarianceSpec(kind=CovarianceKind.TOEPLITZ, rho=0.9), 3)
    np.testing.assert_allclose(sigma, [[1, 0.9, 0.81], [0.9, 1, 0.9], [0.81, 0.9, 1]])


def test_exchangeable_covariance():
    sigma = make_covariance(CovarianceSpec(kind=CovarianceKind.EXCHANGEABLE, rho=0.8), 4)
    np.testing.assert_allclose(np.diag(sigma), 1.0)
    assert sigma[0, 3] == 0.8 and sigma[2, 1] == 0.8


def test_block_covariance_remainder_uncorrelated():
    sigma = make_covariance(CovarianceSpec(kind=CovarianceKind.BLOCK_DIAGONAL, rho=0.9, block=5), 7)
    assert sigma[0, 4] == 0.9
    assert sigma[4, 5] == 0.0
    np.testing.assert_allclose(sigma[5:, 5:], np.eye(2))


def test_covariance_factor():
    sigma = make_covariance(CovarianceSpec(rho=0.7), 6)
    factor = covariance_factor(sigma)
    np.testing.assert_allclose(factor @ factor.T, sigma, atol=1e-12)
    with pytest.raises(NotPositiveDefinite):
        covariance_factor(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_sample_design_deterministic():
    sigma = make_covariance(CovarianceSpec(rho=0.5), 4)
    np.testing.assert_array_equal(sample_design(sigma, 10, seed=3), sample_design(sigma, 10, seed=3))
    assert not np.array_equal(sample_design(sigma, 10, seed=3), sample_design(sigma, 10, seed=4))


@pytest.mark.parametrize("dist", list(ErrorDistribution))
def test_errors_have_unit_variance(dist):
    errors = sample_errors(dist, 400_000, seed=1)
    assert abs(errors.mean()) < 0.01
    assert errors.var() == pytest.approx(1.0, rel=0.05)


def test_fixed_magnitude_from_kappa():
    pattern = CoefficientPattern(kind=CoefficientKind.FIXED_MAGNITUDE, kappa=10)
    beta0, support = make_coefficients(pattern, 500, 3, seed=0, n=100)
    np.testing.assert_array_equal(support, [0, 1, 2])
    np.testing.assert_allclose(beta0[:3], np.sqrt(10 * np.log(500) / 100))
    assert np.count_nonzero(beta0) == 3


def test_random_support_and_empty_support():
    pattern = CoefficientPattern(kind=CoefficientKind.UNIF_RANDOM, low=2, high=4)
    beta0, support = make_coefficients(pattern, 50, 5, seed=2)
    assert support.size == 5
    assert np.all((beta0[support] >= 2) & (beta0[support] <= 4))
    beta0, support = make_coefficients(pattern, 50, 0, seed=2)
    assert support.size == 0 and not np.any(beta0)


# Scenario configuration

def test_fixed_magnitude_needs_one_source():
    with pytest.raises(InvalidScenario):
        small_config(coef_pattern="fixed_magnitude")
    with pytest.raises(InvalidScenario):
        small_config(coef_pattern="fixed_magnitude", coef_value=1, coef_kappa=2)


def test_unknown_key_rejected():
    with pytest.raises(InvalidScenario):
        small_config(colour="blue")


def test_invalid_values_rejected():
    with pytest.raises(InvalidScenario):
        small_config(s0=30)
    with pytest.raises(InvalidScenario):
        small_config(rho=1.0)
    with pytest.raises(InvalidScenario):
        small_config(alphas="0.05,1.5")


def test_mapping_inverse():
    config = small_config(alphas="0.05,0.1", test_groups="S0c;1-3+S0c")
    assert config.alphas == [0.05, 0.1]
    assert config.test_groups == ["S0c", "1-3+S0c"]
    assert scenario_config_from_mapping(scenario_config_to_mapping(config)) == config


def test_load_scenario_file_with_override(tmp_path):
    path = tmp_path / "case.cfg"
    path.write_text("# comment\nname=case\nn=60\np=20\ns0=2\ntask=recovery\nreps=50\n")
    config = load_scenario_config(path, overrides={"reps": 2})
    assert config.task == Task.RECOVERY
    assert config.reps == 2
    with pytest.raises(InputNotFound):
        load_scenario_config(tmp_path / "missing.cfg")


@pytest.mark.parametrize("path", sorted(SCENARIO_DIR.glob("*.cfg")), ids=lambda path: path.stem)
def test_shipped_scenarios_load(path):
    config = load_scenario_config(path)
    assert config.reps >= 1
    harness._check_task(config)


# Harness

def test_state_truth_is_on_the_standardized_scale():
    config = small_config()
    state = prepare_state(config, threads=1)
    np.testing.assert_allclose(state.truth, state.beta0 * state.design.column_sds)
    assert state.precision.p == 20
    assert state.nodewise_lambda == 0.3


def test_zero_replications():
    table = run_scenario(small_config(), reps=0)
    assert table.frame.empty
    assert table.reps == 0 and table.runtime == 0.0


def test_coverage_run_is_reproducible():
    config = small_config()
    first = run_scenario(config, threads=1)
    second = run_scenario(config, threads=3)
    pd.testing.assert_frame_equal(first.frame, second.frame)
    assert first.completed == 3
    coverage = first.frame[first.frame["metric"] == "coverage"]
    assert set(coverage["method"]) == {"NST", "ST", "EX"}
    assert coverage["mean"].between(0, 1).all()
    assert first.value("sigma_ratio", method="scaled_lasso") > 0
    assert "remainder" in set(first.frame["metric"])


def test_replication_seeds_do_not_depend_on_count():
    config = small_config(task="recovery")
    three = run_scenario(config, reps=3, threads=1).replications
    two = run_scenario(config, reps=2, threads=1).replications
    pd.testing.assert_frame_equal(three[three["rep"] <= 2].reset_index(drop=True), two.reset_index(drop=True))


@pytest.mark.parametrize("task", ["sparse_test", "stepdown_fwer", "screening"])
def test_tasks_produce_rows(task):
    config = small_config(task=task, n=100, p=30, c0=0.2, test_groups="S0c")
    table = run_scenario(config, reps=2, threads=1)
    assert table.completed == 2
    assert not table.frame.empty
    assert table.plot_data().shape[0] >= 1


def test_glm_task():
    config = small_config(task="glm_coverage", model="logistic", n=200, p=10, s0=2, coef_pattern="fixed_magnitude",
                          coef_value=1)
    table = run_scenario(config, reps=2, threads=1)
    assert set(table.frame["method"]) == {"NST", "ST"}


def test_logistic_model_needs_glm_task():
    with pytest.raises(InvalidScenario):
        run_scenario(small_config(model="logistic"), reps=1)


def test_failed_replications(monkeypatch):
    config = small_config(task="recovery")
    real = harness.TASKS[Task.RECOVERY]

    def flaky(config, state, rep_seed):
        if rep_seed == harness.derive_seed(config.master_seed, 2):
            raise HDInferError("synthetic failure")
        return real(config, state, rep_seed)

    monkeypatch.setitem(harness.TASKS, Task.RECOVERY, flaky)
    with pytest.raises(ReplicationFailure):
        run_scenario(config, reps=3, threads=1)

    monkeypatch.setattr(settings, "MAX_FAILURE_RATE", 0.5)
    table = run_scenario(config, reps=3, threads=1)
    assert table.failures == 1
    assert set(table.replications["rep"]) == {1, 3}


def test_summarize_standard_errors():
    records = pd.DataFrame({
        "rep": [1, 2, 3, 4, 1, 2, 3, 4],
        "method": ["ST"] * 4 + ["ST"] * 4,
        "group": ["all"] * 8,
        "alpha": [0.05] * 8,
        "metric": ["coverage"] * 4 + ["width"] * 4,
        "value": [1, 1, 1, 0, 1.0, 2.0, 3.0, 4.0],
    })
    frame = summarize(records, "case", "ci_coverage").set_index("metric")
    assert frame.loc["coverage", "mean"] == 0.75
    assert frame.loc["coverage", "se"] == pytest.approx(np.sqrt(0.75 * 0.25 / 4))
    assert frame.loc["width", "se"] == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)


def test_summarize_rates_above_one_are_not_probabilities():
    records = pd.DataFrame({
        "rep": [1, 2, 3, 1, 2, 3],
        "method": ["NST"] * 6,
        "group": ["all"] * 6,
        "alpha": [0.05] * 6,
        "metric": ["width"] * 3 + ["fwer"] * 3,
        "value": [1.4, 1.5, 1.9, 0, 0, 1],
    })
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        frame = summarize(records, "case", "stepdown_fwer").set_index("metric")
    assert frame.loc["width", "se"] == pytest.approx(np.std([1.4, 1.5, 1.9], ddof=1) / np.sqrt(3))
    assert frame.loc["fwer", "se"] == pytest.approx(np.sqrt(1 / 3 * 2 / 3 / 3))


# Monte Carlo acceptance checks

@pytest.mark.slow
def test_coverage_near_nominal():
    config = load_scenario_config(SCENARIO_DIR / "coverage_p120_toeplitz.cfg", overrides={"reps": 200})
    table = run_scenario(config)
    assert abs(table.value("coverage", method="NST", group="all", alpha=0.05) - 0.95) <= 0.04
    assert abs(table.value("width", method="NST", group="all", alpha=0.05) - 1.50) <= 0.12


@pytest.mark.slow
def test_recovery_with_threshold():
    config = load_scenario_config(SCENARIO_DIR / "recovery_p120_toeplitz.cfg", overrides={"reps": 200})
    table = run_scenario(config)
    assert table.value("d", method="desparsified") >= 0.94
    assert table.value("fn", method="desparsified") <= 0.05
    assert table.value("fp", method="desparsified") <= 0.6


@pytest.mark.slow
def test_stepdown_controls_fwer():
    config = load_scenario_config(SCENARIO_DIR / "stepdown_p120_toeplitz.cfg", overrides={"reps": 200})
    table = run_scenario(config)
    assert table.value("fwer", method="stepdown_NST", alpha=0.05) <= 0.05 + 0.04


@pytest.mark.slow
def test_three_step_beats_one_step():
    config = load_scenario_config(SCENARIO_DIR / "sparse_test_p500_toeplitz.cfg", overrides={"reps": 200})
    table = run_scenario(config)
    one_step = table.value("reject", method="one_step_NST", group="3+S0c", alpha=0.05)
    three_step = table.value("reject", method="three_step_NST", group="3+S0c", alpha=0.05)
    assert three_step - one_step >= 0.03
    for method in ("one_step_NST", "three_step_NST"):
        assert table.value("reject", method=method, group="S0c", alpha=0.05) <= 0.10


@pytest.mark.slow
def test_iterative_screening_inclusion():
    config = load_scenario_config(SCENARIO_DIR / "screening_p500_exchangeable.cfg", overrides={"reps": 200})
    table = run_scenario(config)
    iterative = table.value("inclusion", method="iterative", group="S0")
    marginal = table.value("inclusion", method="marginal", group="S0")
    assert iterative >= 0.90
    assert iterative - marginal >= 0.25


@pytest.mark.slow
def test_logistic_coverage():
    config = load_scenario_config(SCENARIO_DIR / "glm_logistic_p30.cfg", overrides={"reps": 200})
    table = run_scenario(config)
    assert table.value("coverage", method="NST", alpha=0.05) >= 0.85
