"""
Monte Carlo harness.

Replication ``r`` derives all of its seeds from ``(master_seed, r)`` and the
design is fixed per scenario seed, so every replication can run on its own
thread and the aggregated table does not depend on execution order.
"""

import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from src.bootstrap.distribution import Variant, critical_value
from src.bootstrap.extreme_value import extreme_value_half_width_factor
from src.bootstrap.multiplier import MultiplierBootstrap
from src.bootstrap.testing import simultaneous_test
from src.config import settings, logger
from src.desparsify.estimator import desparsified_lasso, remainder_diagnostic, simultaneous_ci
from src.exceptions import HDInferError, InvalidScenario, ReplicationFailure
from src.glm.bootstrap import glm_bootstrap
from src.glm.estimator import glm_desparsified, standardize_design
from src.glm.losses import logistic_loss, squared_loss
from src.nodewise.precision import PrecisionEstimate, precision_estimate
from src.nodewise.tuning import shared_cv_lambda_nodewise
from src.procedures.multiple_testing import bonferroni_holm, stepdown_fwer
from src.procedures.recovery import lasso_support, selection_errors, similarity, support_recover
from src.procedures.screening import screen_size, split_sample
from src.procedures.three_step import screen, screened_test, split_and_screen
from src.solvers.dataset import Dataset, standardize
from src.storage.cache_client import CacheClient
from src.utils.groups import parse_group_spec
from src.utils.parallel import ordered_map
from src.utils.rng import derive_seed

from .generators import (
    logistic_response,
    make_coefficients,
    make_covariance,
    sample_design,
    sample_errors,
)
from .scenario import ResponseModel, ScenarioConfig, Task

SUMMARY_COLUMNS = ["scenario", "task", "method", "group", "alpha", "metric", "mean", "sd", "se", "count"]
RECORD_COLUMNS = ["rep", "method", "group", "alpha", "metric", "value"]
PROBABILITY_METRICS = {"coverage", "reject", "fwer", "inclusion"}

_VARIANTS = (("NST", False), ("ST", True))


@dataclass
class ScenarioState:
    """Per-design state shared by the replications: truth, standardized design and precision."""

    X: np.ndarray = field(repr=False)
    design: Dataset = field(repr=False)
    beta0: np.ndarray
    support: np.ndarray
    truth: np.ndarray
    precision: Optional[PrecisionEstimate] = field(default=None, repr=False)
    nodewise_lambda: Optional[float] = None

    @property
    def n(self) -> int:
        return self.design.n

    @property
    def p(self) -> int:
        return self.design.p


def prepare_state(config: ScenarioConfig, design_seed: Optional[int] = None,
                  cache: Optional[CacheClient] = None, threads: Optional[int] = None) -> ScenarioState:
    """
    Draw the design and the coefficients, standardize, and (for linear tasks) fit the precision once.

    On the standardized scale the linear truth is ``beta0 * column_sd``; the
    logistic response is generated from the standardized design directly, so
    its truth is ``beta0`` itself.

    Args:
        config: Scenario and task
        design_seed: Seed of the design draw (defaults to one derived from the scenario seed)
        cache: Precision cache
        threads: Worker threads for the nodewise fits

    Returns:
        ScenarioState
    """
    scenario = config.scenario
    sigma = make_covariance(scenario.covariance, scenario.p)
    if design_seed is None:
        design_seed = derive_seed(scenario.seed, 0)
    X = sample_design(sigma, scenario.n, design_seed)
    beta0, support = make_coefficients(scenario.coefficients, scenario.p, scenario.s0,
                                       derive_seed(scenario.seed, 1), n=scenario.n)
    design = standardize(Dataset(X=X, Y=np.zeros(scenario.n)))
    if scenario.model == ResponseModel.LOGISTIC:
        truth = beta0.copy()
    else:
        truth = beta0 * design.column_sds

    state = ScenarioState(X=X, design=design, beta0=beta0, support=support, truth=truth)
    if config.task in (Task.CI_COVERAGE, Task.SPARSE_TEST, Task.RECOVERY, Task.STEPDOWN_FWER):
        lam = config.nodewise_lambda
        if lam is None:
            lam = shared_cv_lambda_nodewise(design, seed=derive_seed(scenario.seed, 2), threads=threads)
        state.nodewise_lambda = float(lam)
        state.precision = precision_estimate(design, lam, cache=cache, threads=threads)
        logger.info(f"Scenario {scenario.name!r}: nodewise lambda {state.nodewise_lambda:.4g} fixed for the design")
    return state


def _linear_response(config: ScenarioConfig, state: ScenarioState, seed: int) -> np.ndarray:
    errors = sample_errors(config.scenario.error_dist, state.n, seed)
    return state.X @ state.beta0 + errors


def _record(records: List[Dict[str, Any]], method: str, group: str, alpha: Optional[float],
            metric: str, value: float) -> None:
    records.append({"method": method, "group": group, "alpha": np.nan if alpha is None else float(alpha),
                    "metric": metric, "value": float(value)})


def _linear_fit(config: ScenarioConfig, state: ScenarioState, rep_seed: int):
    Y = _linear_response(config, state, derive_seed(rep_seed, 0))
    data = state.design.with_response(Y)
    fit = desparsified_lasso(data, precision=state.precision, threads=1)
    engine = MultiplierBootstrap.from_fit(fit, B=config.bootstrap_draws, seed=derive_seed(rep_seed, 1), threads=1)
    return Y, fit, engine


def _ci_coverage(config: ScenarioConfig, state: ScenarioState, rep_seed: int) -> List[Dict[str, Any]]:
    records: List[Dict[str, Any]] = []
    _, fit, engine = _linear_fit(config, state, rep_seed)
    for label in config.ci_groups:
        group = parse_group_spec(label, state.p, support=state.support, allow_empty=True)
        if group.size == 0:
            continue
        for alpha in config.alphas:
            for method, studentized in _VARIANTS:
                dist = engine.distribution(group, Variant.from_flags(studentized, two_sided=True))
                ci = simultaneous_ci(fit, group, critical_value(dist, alpha), studentized)
                _record(records, method, label, alpha, "coverage", ci.covers(state.truth))
                _record(records, method, label, alpha, "width", ci.mean_width)
            # the extreme-value approximation is only used for large groups
            if group.size >= 2 and not np.array_equal(group, state.support):
                ci = simultaneous_ci(fit, group, extreme_value_half_width_factor(alpha, group.size), True)
                _record(records, "EX", label, alpha, "coverage", ci.covers(state.truth))
                _record(records, "EX", label, alpha, "width", ci.mean_width)

    noise = fit.noise
    _record(records, "scaled_lasso", "all", None, "sigma_ratio", noise.sigma_hat)
    _record(records, "scaled_lasso_modified", "all", None, "sigma_ratio", noise.sigma_hat_modified)
    diagnostic = remainder_diagnostic(fit, state.truth)
    _record(records, f"nodewise_{state.nodewise_lambda:.4g}", "S0", None, "remainder", diagnostic.max_active)
    _record(records, f"nodewise_{state.nodewise_lambda:.4g}", "S0c", None, "remainder", diagnostic.max_inactive)
    return records


def _sparse_test(config: ScenarioConfig, state: ScenarioState, rep_seed: int) -> List[Dict[str, Any]]:
    records: List[Dict[str, Any]] = []
    Y, fit, engine = _linear_fit(config, state, rep_seed)
    model = split_and_screen(Dataset(X=state.X, Y=Y), config.c0, screen_mode=config.screen_mode,
                             seed=derive_seed(rep_seed, 2), k1=config.k1)
    for label in config.test_groups:
        group = parse_group_spec(label, state.p, support=state.support)
        for alpha in config.alphas:
            for method, studentized in _VARIANTS:
                dist = engine.distribution(group, Variant.from_flags(studentized, two_sided=True))
                one_step = simultaneous_test(fit, None, group, dist, alpha)
                _record(records, f"one_step_{method}", label, alpha, "reject", one_step.reject)
                three_step = screened_test(model, group, alpha, studentized=studentized, B=config.bootstrap_draws,
                                           nodewise_lambda=config.nodewise_lambda, threads=1)
                _record(records, f"three_step_{method}", label, alpha, "reject", three_step.reject)
    return records


def _recovery(config: ScenarioConfig, state: ScenarioState, rep_seed: int) -> List[Dict[str, Any]]:
    records: List[Dict[str, Any]] = []
    _, fit, _ = _linear_fit(config, state, rep_seed)
    selections = {
        "desparsified": support_recover(fit, None, config.tau).selected,
        "lasso": lasso_support(fit.lasso),
    }
    for method, selected in selections.items():
        fp, fn = selection_errors(selected, state.support)
        _record(records, method, "all", None, "d", similarity(selected, state.support))
        _record(records, method, "all", None, "fp", fp)
        _record(records, method, "all", None, "fn", fn)
    return records


def _stepdown(config: ScenarioConfig, state: ScenarioState, rep_seed: int) -> List[Dict[str, Any]]:
    records: List[Dict[str, Any]] = []
    _, fit, engine = _linear_fit(config, state, rep_seed)
    s0 = state.support.size

    def score(method: str, alpha: float, rejected: np.ndarray) -> None:
        false = np.setdiff1d(rejected, state.support)
        hits = np.intersect1d(rejected, state.support)
        _record(records, method, "all", alpha, "fwer", false.size > 0)
        _record(records, method, "all", alpha, "power", hits.size / s0)

    for alpha in config.alphas:
        for method, studentized in _VARIANTS:
            result = stepdown_fwer(fit, None, None, alpha, sided="two", studentized=studentized, engine=engine)
            score(f"stepdown_{method}", alpha, result.rejected)
        score("holm", alpha, bonferroni_holm(fit, None, None, alpha))
    return records


def _screening(config: ScenarioConfig, state: ScenarioState, rep_seed: int) -> List[Dict[str, Any]]:
    records: List[Dict[str, Any]] = []
    Y = _linear_response(config, state, derive_seed(rep_seed, 0))
    screen_rows, test_rows = split_sample(state.n, config.c0, derive_seed(rep_seed, 2))
    screening_data = standardize(Dataset(X=state.X, Y=Y).subset_rows(screen_rows))
    k = screen_size(test_rows.size)
    for mode in ("marginal", "iterative"):
        screened = screen(screening_data, k, mode=mode, k1=config.k1)
        _record(records, mode, "S0", None, "inclusion", bool(np.all(np.isin(state.support, screened))))
    return records


def _glm_coverage(config: ScenarioConfig, state: ScenarioState, rep_seed: int) -> List[Dict[str, Any]]:
    records: List[Dict[str, Any]] = []
    if config.scenario.model == ResponseModel.LOGISTIC:
        loss = logistic_loss()
        Y = logistic_response(state.design.X @ state.beta0, derive_seed(rep_seed, 0))
        data = standardize_design(Dataset(X=state.X, Y=Y))
    else:
        loss = squared_loss()
        data = state.design.with_response(_linear_response(config, state, derive_seed(rep_seed, 0)))
    fit = glm_desparsified(data, loss, nodewise_lambda=config.nodewise_lambda,
                           cv_seed=derive_seed(rep_seed, 2), threads=1)
    for method, studentized in _VARIANTS:
        dist = glm_bootstrap(fit, None, B=config.bootstrap_draws, seed=derive_seed(rep_seed, 1),
                             studentized=studentized, threads=1)
        for alpha in config.alphas:
            ci = simultaneous_ci(fit, None, critical_value(dist, alpha), studentized)
            _record(records, method, "all", alpha, "coverage", ci.covers(state.truth))
            _record(records, method, "all", alpha, "width", ci.mean_width)
    return records


TASKS: Dict[Task, Callable[[ScenarioConfig, ScenarioState, int], List[Dict[str, Any]]]] = {
    Task.CI_COVERAGE: _ci_coverage,
    Task.SPARSE_TEST: _sparse_test,
    Task.RECOVERY: _recovery,
    Task.STEPDOWN_FWER: _stepdown,
    Task.SCREENING: _screening,
    Task.GLM_COVERAGE: _glm_coverage,
}


def _check_task(config: ScenarioConfig) -> None:
    scenario = config.scenario
    if config.task != Task.GLM_COVERAGE and scenario.model != ResponseModel.LINEAR:
        raise InvalidScenario(f"Task {config.task.value} needs a linear model", task=config.task.value)
    if config.task in (Task.RECOVERY, Task.STEPDOWN_FWER, Task.SCREENING) and scenario.s0 == 0:
        raise InvalidScenario(f"Task {config.task.value} needs s0 >= 1", task=config.task.value)
    for label in config.test_groups:
        parse_group_spec(label, scenario.p, support=range(scenario.s0))
    for label in config.ci_groups:
        parse_group_spec(label, scenario.p, support=range(scenario.s0), allow_empty=True)


@dataclass
class SummaryTable:
    """Aggregated metrics in long format, one row per (method, group, alpha, metric)."""

    scenario: str
    task: str
    frame: pd.DataFrame
    replications: pd.DataFrame = field(repr=False)
    reps: int = 0
    failures: int = 0
    runtime: float = 0.0

    @property
    def completed(self) -> int:
        return self.reps - self.failures

    def value(self, metric: str, method: Optional[str] = None, group: Optional[str] = None,
              alpha: Optional[float] = None, column: str = "mean") -> float:
        """Single cell of the table; raises KeyError when no row matches."""
        rows = self.frame[self.frame["metric"] == metric]
        if method is not None:
            rows = rows[rows["method"] == method]
        if group is not None:
            rows = rows[rows["group"] == group]
        if alpha is not None:
            rows = rows[np.isclose(rows["alpha"], alpha)]
        if len(rows) != 1:
            raise KeyError(f"{len(rows)} rows match metric={metric}, method={method}, group={group}, alpha={alpha}")
        return float(rows[column].iloc[0])

    def plot_data(self) -> pd.DataFrame:
        """Wide table of means, one column per metric."""
        if self.frame.empty:
            return pd.DataFrame(columns=["scenario", "method", "group", "alpha"])
        wide = self.frame.set_index(["scenario", "method", "group", "alpha", "metric"])["mean"].unstack("metric")
        return wide.reset_index()

    def to_dict(self) -> Dict[str, Any]:
        rows = self.frame.astype(object).where(self.frame.notna(), None).to_dict(orient="records")
        return {
            "scenario": self.scenario,
            "task": self.task,
            "reps": self.reps,
            "failures": self.failures,
            "runtime_seconds": self.runtime,
            "rows": rows,
        }


def summarize(records: pd.DataFrame, scenario: str, task: str) -> pd.DataFrame:
    """Mean, sd, count and standard error per (method, group, alpha, metric).

    Probability metrics carry the binomial standard error ``sqrt(p(1 - p) / count)``.
    """
    if records.empty:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)
    records = records.sort_values(["rep", "method", "group", "alpha", "metric"], kind="stable")
    grouped = records.groupby(["method", "group", "alpha", "metric"], dropna=False, sort=True)["value"]
    frame = grouped.agg(mean="mean", sd="std", count="count").reset_index()
    frame["sd"] = frame["sd"].fillna(0.0)
    probability = frame["metric"].isin(PROBABILITY_METRICS)
    frame["se"] = frame["sd"] / np.sqrt(frame["count"])
    rates = frame.loc[probability]
    frame.loc[probability, "se"] = np.sqrt(rates["mean"] * (1.0 - rates["mean"]) / rates["count"])
    frame.insert(0, "task", task)
    frame.insert(0, "scenario", scenario)
    return frame[SUMMARY_COLUMNS]


def run_scenario(config: ScenarioConfig, reps: Optional[int] = None, cache: Optional[CacheClient] = None,
                 threads: Optional[int] = None) -> SummaryTable:
    """
    Run ``reps`` Monte Carlo replications of the configured task and aggregate them.

    Failed replications (any ``HDInferError``) are logged and excluded; the run
    fails when they reach ``settings.MAX_FAILURE_RATE`` of the replications.

    Args:
        config: Scenario, task and Monte Carlo settings
        reps: Replication count overriding ``config.reps``
        cache: Precision cache for the fixed design
        threads: Worker threads (replications run in parallel)

    Returns:
        SummaryTable

    Raises:
        InvalidScenario: If the task does not fit the scenario
        ReplicationFailure: If too many replications failed
    """
    reps = config.reps if reps is None else int(reps)
    name, task = config.scenario.name, config.task.value
    if reps <= 0:
        return SummaryTable(scenario=name, task=task, frame=pd.DataFrame(columns=SUMMARY_COLUMNS),
                            replications=pd.DataFrame(columns=RECORD_COLUMNS), reps=0, runtime=0.0)
    _check_task(config)

    start = time.perf_counter()
    shared = None if config.scenario.redraw_design else prepare_state(config, cache=cache, threads=threads)
    run_task = TASKS[config.task]

    def replicate(r: int):
        rep_seed = derive_seed(config.master_seed, r)
        try:
            state = shared or prepare_state(config, design_seed=derive_seed(rep_seed, 3), threads=1)
            rows = run_task(config, state, rep_seed)
        except HDInferError as e:
            logger.warning(f"Replication {r} of {name!r} excluded: {e.code}: {e.message}")
            return r, None, f"{e.code}: {e.message}"
        for row in rows:
            row["rep"] = r
        return r, rows, None

    outcomes = ordered_map(replicate, range(1, reps + 1), threads=threads)
    failures = [error for _, rows, error in outcomes if rows is None]
    if failures and len(failures) >= settings.MAX_FAILURE_RATE * reps:
        raise ReplicationFailure(len(failures), reps, last_error=failures[-1])

    records = pd.DataFrame([row for _, rows, _ in outcomes if rows for row in rows], columns=RECORD_COLUMNS)
    frame = summarize(records, name, task)
    runtime = time.perf_counter() - start
    logger.info(f"Scenario {name!r} ({task}) finished: {reps - len(failures)} of {reps} replications "
                f"in {runtime:.1f}s")
    return SummaryTable(scenario=name, task=task, frame=frame, replications=records, reps=reps,
                        failures=len(failures), runtime=runtime)
