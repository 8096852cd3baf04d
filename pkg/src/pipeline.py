import json
import time
from pathlib import Path
from typing import Any, Dict, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.bootstrap.distribution import Variant, critical_value
from src.bootstrap.extreme_value import extreme_value_test
from src.bootstrap.multiplier import MultiplierBootstrap
from src.bootstrap.testing import resolve_null, simultaneous_test
from src.config import settings, logger
from src.desparsify.estimator import DesparsifiedFit, desparsified_lasso, simultaneous_ci
from src.exceptions import InvalidConfig
from src.glm.bootstrap import glm_bootstrap
from src.glm.estimator import glm_desparsified, standardize_design
from src.glm.losses import get_loss
from src.nodewise.precision import precision_cache_key
from src.procedures.multiple_testing import stepdown_fwer
from src.procedures.recovery import support_recover
from src.procedures.three_step import three_step_test
from src.sim.harness import SummaryTable, run_scenario
from src.sim.scenario import load_scenario_config, scenario_config_to_mapping
from src.solvers.dataset import Dataset, standardize
from src.storage.cache_client import CacheClient
from src.storage.dataset_io import load_dataset
from src.storage.result_writer import ResultWriter, read_json_artifact
from src.utils.groups import parse_group_spec

Command = Literal["fit", "test", "simulate", "glm-test"]
Method = Literal["single", "three-step", "stepdown", "recover", "ex"]

# Fields that do not change results and stay out of the embedded config
RUNTIME_FIELDS = {"out", "threads", "log_level"}


class RunConfig(BaseModel):
    """Everything one CLI invocation depends on."""

    model_config = ConfigDict(frozen=True)

    command: Command
    x: Optional[str] = None
    y: Optional[str] = None
    scenario: Optional[str] = None
    alpha: float = 0.05
    group: str = "all"
    beta_null: Optional[str] = None
    bootstrap_draws: int = Field(default=settings.BOOTSTRAP_DRAWS, ge=100)
    seed: int = 0
    studentized: bool = False
    sided: Literal["one", "two"] = "two"
    method: Method = "single"
    screen: Literal["marginal", "iterative"] = "marginal"
    c0: float = Field(default=0.2, gt=0, lt=1)
    tau: float = Field(default=2.0, ge=0)
    intervals: bool = False
    nodewise_lambda: Optional[float] = Field(default=None, gt=0)
    loss: Literal["logistic", "squared"] = "logistic"
    reps: Optional[int] = Field(default=None, ge=0)
    out: str = "results"
    threads: Optional[int] = Field(default=None, ge=1)
    log_level: str = "INFO"

    @field_validator("alpha")
    @classmethod
    def _alpha_in_unit_interval(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {value}")
        return value

    @model_validator(mode="after")
    def _one_input_source(self) -> "RunConfig":
        has_data = self.x is not None or self.y is not None
        if self.command == "simulate":
            if self.scenario is None or has_data:
                raise ValueError("simulate takes --scenario and no data paths")
        elif self.scenario is not None or self.x is None or self.y is None:
            raise ValueError(f"{self.command} takes both --x and --y and no scenario")
        return self

    @classmethod
    def build(cls, **values: Any) -> "RunConfig":
        """Validated config; pydantic errors surface as InvalidConfig."""
        try:
            return cls(**values)
        except ValidationError as e:
            raise InvalidConfig(f"Invalid run configuration: {e.errors()[0]['msg']}",
                                errors=[str(err["msg"]) for err in e.errors()])

    @classmethod
    def from_artifact(cls, path: Union[str, Path], **runtime: Any) -> "RunConfig":
        """Config embedded in a result artifact, with runtime-only fields supplied anew."""
        document = read_json_artifact(str(path))
        values = dict(document.get("config", {}))
        values.update({key: value for key, value in runtime.items() if value is not None})
        return cls.build(**values)

    def embedded(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", exclude=RUNTIME_FIELDS)


class InferencePipeline:
    def __init__(self, config: RunConfig, cache: Optional[CacheClient] = None):
        """Initialize the pipeline for one run.

        Args:
            config: Validated run configuration
            cache: Precision cache (defaults to HDINFER_CACHE_DIR)
        """
        self.config = config
        self.writer = ResultWriter(config.out, config.embedded())
        self.cache = cache or CacheClient()
        logger.info(f"Initialized InferencePipeline for '{config.command}'")

    def run(self) -> Dict[str, Any]:
        handlers = {
            "fit": self.fit,
            "test": self.test,
            "simulate": self.simulate,
            "glm-test": self.glm_test,
        }
        return handlers[self.config.command]()

    def _load(self) -> Dataset:
        return load_dataset(self.config.x, self.config.y)

    def _group(self, p: int) -> np.ndarray:
        return parse_group_spec(self.config.group, p)

    def _null(self, data: Dataset) -> np.ndarray:
        """Hypothesised coefficients mapped from the original to the standardized scale."""
        raw = self.config.beta_null
        if raw is None:
            return np.zeros(data.p)
        try:
            values = [float(v) for v in raw.split(",")]
        except ValueError:
            raise InvalidConfig(f"Cannot parse --beta-null {raw!r}")
        beta_tilde = resolve_null(values[0] if len(values) == 1 else values, data.p)
        return beta_tilde * data.column_sds

    def _fit_linear(self, data: Dataset) -> DesparsifiedFit:
        return desparsified_lasso(data, nodewise_lambda=self.config.nodewise_lambda, cv_seed=self.config.seed,
                                  cache=self.cache, threads=self.config.threads)

    def fit(self) -> Dict[str, Any]:
        """Standardize, scaled Lasso, nodewise precision and de-sparsification; writes fit.json."""
        data = standardize(self._load())
        fit = self._fit_linear(data)
        report = {
            "n": data.n,
            "p": data.p,
            "beta_breve": fit.beta_breve.tolist(),
            "beta_breve_original_scale": (fit.beta_breve / data.column_sds).tolist(),
            "omega_diag": fit.omega_diag.tolist(),
            "column_sds": data.column_sds.tolist(),
            "noise": fit.noise.to_dict(one_based=True),
            "nodewise_lambda": float(fit.precision.lambdas[0]),
            "precision_cache_key": precision_cache_key(data, fit.precision.lambdas),
        }
        self.writer.write_json("fit.json", report)
        return report

    def test(self) -> Dict[str, Any]:
        """Run the requested test method and write test.json (indices are 1-based)."""
        config = self.config
        raw = self._load()
        data = standardize(raw)
        group = self._group(data.p)
        beta_tilde = self._null(data)

        if config.method == "three-step":
            if np.any(beta_tilde != 0):
                raise InvalidConfig("The three-step test only supports the null beta = 0")
            result = three_step_test(raw, group, config.alpha, config.c0, screen_mode=config.screen,
                                     studentized=config.studentized, B=config.bootstrap_draws,
                                     seed=config.seed, nodewise_lambda=config.nodewise_lambda,
                                     threads=config.threads)
            report = result.to_dict(one_based=True)
            self.writer.write_json("test.json", report)
            return report

        fit = self._fit_linear(data)
        if config.method == "recover":
            report = {"method": "recover", **support_recover(fit, group, config.tau).to_dict(one_based=True)}
        elif config.method == "ex":
            report = extreme_value_test(fit, beta_tilde, group, config.alpha).to_dict(one_based=True)
        else:
            engine = MultiplierBootstrap.from_fit(fit, B=config.bootstrap_draws, seed=config.seed,
                                                  threads=config.threads)
            if config.method == "stepdown":
                result = stepdown_fwer(fit, beta_tilde, group, config.alpha, sided=config.sided,
                                       studentized=config.studentized, engine=engine)
                report = {"method": "stepdown", **result.to_dict(one_based=True)}
            else:
                variant = Variant.from_flags(config.studentized, two_sided=(config.sided == "two"))
                dist = engine.distribution(group, variant)
                report = simultaneous_test(fit, beta_tilde, group, dist, config.alpha).to_dict(one_based=True)
            if config.intervals:
                report["intervals"] = self._intervals(fit, engine, group, data)

        self.writer.write_json("test.json", report)
        return report

    def _intervals(self, fit: DesparsifiedFit, engine: MultiplierBootstrap, group: np.ndarray,
                   data: Dataset) -> Dict[str, Any]:
        """Two-sided simultaneous intervals over ``group`` on the original scale."""
        studentized = self.config.studentized
        dist = engine.distribution(group, Variant.from_flags(studentized, two_sided=True))
        ci = simultaneous_ci(fit, group, critical_value(dist, self.config.alpha), studentized)
        scale = data.column_sds[group]
        return {
            "group": [int(j) + 1 for j in group],
            "lower": (ci.lower / scale).tolist(),
            "upper": (ci.upper / scale).tolist(),
            "critical": ci.critical,
            "studentized": studentized,
        }

    def glm_test(self) -> Dict[str, Any]:
        """Convex-loss de-biased fit and multiplier-bootstrap test; writes glm.json."""
        config = self.config
        data = standardize_design(self._load())
        group = self._group(data.p)
        beta_tilde = self._null(data)
        loss = get_loss(config.loss)
        fit = glm_desparsified(data, loss, nodewise_lambda=config.nodewise_lambda, cv_seed=config.seed,
                               cache=self.cache, threads=config.threads)
        dist = glm_bootstrap(fit, group, B=config.bootstrap_draws, seed=config.seed,
                             studentized=config.studentized, threads=config.threads)
        report = simultaneous_test(fit, beta_tilde, group, dist, config.alpha).to_dict(one_based=True)
        report["loss"] = loss.name
        report["fit"] = fit.to_dict()
        if config.intervals:
            ci = simultaneous_ci(fit, group, critical_value(dist, config.alpha), config.studentized)
            report["intervals"] = ci.to_dict(one_based=True)
        self.writer.write_json("glm.json", report)
        return report

    def simulate(self) -> Dict[str, Any]:
        """Run a scenario file and write summary.csv, summary.json, replications.csv and plot_data.csv."""
        config = self.config
        started = time.perf_counter()
        scenario_config = load_scenario_config(config.scenario, overrides={"reps": config.reps})
        table: SummaryTable = run_scenario(scenario_config, cache=self.cache, threads=config.threads)
        wall_time = time.perf_counter() - started

        header = [f"scenario: {json.dumps(scenario_config_to_mapping(scenario_config), sort_keys=True)}",
                  f"reps: {table.reps}, failures: {table.failures}, seed: {scenario_config.master_seed}, "
                  f"B: {scenario_config.bootstrap_draws}"]
        self.writer.write_table("summary.csv", table.frame, header=header)
        self.writer.write_table("replications.csv", table.replications, header=header)
        self.writer.write_table("plot_data.csv", table.plot_data(), header=header)
        report = table.to_dict()
        report["scenario_config"] = scenario_config_to_mapping(scenario_config)
        self.writer.write_json("summary.json", report, extra_provenance={"wall_time_seconds": wall_time})
        return report
