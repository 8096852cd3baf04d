"""
Scenario definitions for the Monte Carlo study.

Scenario files are flat ``key=value`` files (the same syntax as ``.env``),
read with ``dotenv_values`` and validated by the pydantic models below.
"""

from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.config import logger
from src.exceptions import InputNotFound, InvalidScenario


class CovarianceKind(str, Enum):
    TOEPLITZ = "toeplitz"
    EXCHANGEABLE = "exchangeable"
    BLOCK_DIAGONAL = "block_diagonal"
    IDENTITY = "identity"


class ErrorDistribution(str, Enum):
    STUDENT_T4_SCALED = "student_t4_scaled"
    GAMMA41_STANDARDIZED = "gamma41_standardized"
    GAUSSIAN = "gaussian"


class CoefficientKind(str, Enum):
    UNIF_FIRST = "unif_first"
    UNIF_RANDOM = "unif_random"
    FIXED_MAGNITUDE = "fixed_magnitude"


class Task(str, Enum):
    CI_COVERAGE = "ci_coverage"
    SPARSE_TEST = "sparse_test"
    RECOVERY = "recovery"
    STEPDOWN_FWER = "stepdown_fwer"
    SCREENING = "screening"
    GLM_COVERAGE = "glm_coverage"


class ResponseModel(str, Enum):
    LINEAR = "linear"
    LOGISTIC = "logistic"


class CovarianceSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: CovarianceKind = CovarianceKind.TOEPLITZ
    rho: float = 0.9
    block: int = Field(default=5, ge=1)

    @field_validator("rho")
    @classmethod
    def _rho_open_interval(cls, value: float) -> float:
        if not -1.0 < value < 1.0:
            raise ValueError(f"rho must lie in (-1, 1), got {value}")
        return value


class CoefficientPattern(BaseModel):
    """Nonzero coefficients: uniform on the first or on random ``s0`` indices, or a fixed magnitude.

    ``fixed_magnitude`` takes either ``value`` or a factor ``kappa`` giving
    ``beta_j = sqrt(kappa * log(p) / n)``.
    """

    model_config = ConfigDict(frozen=True)

    kind: CoefficientKind = CoefficientKind.UNIF_FIRST
    low: float = 0.0
    high: float = 2.0
    value: Optional[float] = None
    kappa: Optional[float] = None

    @model_validator(mode="after")
    def _check_pattern(self) -> "CoefficientPattern":
        if self.kind == CoefficientKind.FIXED_MAGNITUDE:
            if (self.value is None) == (self.kappa is None):
                raise ValueError("fixed_magnitude needs exactly one of value or kappa")
            if self.kappa is not None and self.kappa <= 0:
                raise ValueError(f"kappa must be positive, got {self.kappa}")
        elif self.high < self.low:
            raise ValueError(f"Uniform bounds out of order: [{self.low}, {self.high}]")
        return self


class Scenario(BaseModel):
    """Data-generating process: design law, coefficients and error law."""

    model_config = ConfigDict(frozen=True)

    name: str = "scenario"
    n: int = Field(ge=2)
    p: int = Field(ge=1)
    covariance: CovarianceSpec = CovarianceSpec()
    error_dist: ErrorDistribution = ErrorDistribution.STUDENT_T4_SCALED
    coefficients: CoefficientPattern = CoefficientPattern()
    s0: int = Field(default=3, ge=0)
    seed: int = 0
    model: ResponseModel = ResponseModel.LINEAR
    redraw_design: bool = False

    @model_validator(mode="after")
    def _check_sparsity(self) -> "Scenario":
        if self.s0 > self.p:
            raise ValueError(f"s0={self.s0} exceeds p={self.p}")
        return self


class ScenarioConfig(BaseModel):
    """A scenario plus the task and Monte Carlo settings of one simulation run."""

    model_config = ConfigDict(frozen=True)

    scenario: Scenario
    task: Task = Task.CI_COVERAGE
    reps: int = Field(default=100, ge=0)
    bootstrap_draws: int = Field(default=1000, ge=100)
    master_seed: int = 0
    alphas: List[float] = [0.05]
    nodewise_lambda: Optional[float] = Field(default=None, gt=0)
    tau: float = Field(default=2.0, ge=0)
    c0: float = Field(default=0.2, gt=0, lt=1)
    screen_mode: str = "marginal"
    k1: Optional[int] = Field(default=None, ge=0)
    test_groups: List[str] = ["S0c"]
    ci_groups: List[str] = ["S0", "S0c", "all"]

    @field_validator("alphas")
    @classmethod
    def _alphas_in_unit_interval(cls, values: List[float]) -> List[float]:
        if not values:
            raise ValueError("at least one alpha is required")
        for alpha in values:
            if not 0.0 < alpha < 1.0:
                raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
        return values

    @field_validator("screen_mode")
    @classmethod
    def _known_screen_mode(cls, value: str) -> str:
        if value not in ("marginal", "iterative"):
            raise ValueError(f"screen_mode must be marginal or iterative, got {value!r}")
        return value


# Flat file keys that belong to the nested models
_COVARIANCE_KEYS = {"covariance": "kind", "rho": "rho", "block": "block"}
_COEFFICIENT_KEYS = {"coef_pattern": "kind", "coef_low": "low", "coef_high": "high",
                     "coef_value": "value", "coef_kappa": "kappa"}
_SCENARIO_KEYS = {"name", "n", "p", "error_dist", "s0", "seed", "model", "redraw_design"}
_LIST_KEYS = {"alphas", "test_groups", "ci_groups"}


def _split_list(key: str, raw: str) -> List[str]:
    separator = ";" if key in ("test_groups", "ci_groups") else ","
    return [item.strip() for item in raw.split(separator) if item.strip()]


def scenario_config_from_mapping(values: Dict[str, Any]) -> ScenarioConfig:
    """
    Build a ScenarioConfig from flat ``key=value`` pairs.

    Args:
        values: Flat mapping (strings as read from a file, or typed values)

    Returns:
        ScenarioConfig

    Raises:
        InvalidScenario: On unknown keys or values failing validation
    """
    covariance: Dict[str, Any] = {}
    coefficients: Dict[str, Any] = {}
    scenario: Dict[str, Any] = {}
    run: Dict[str, Any] = {}
    for key, value in values.items():
        if value is None or value == "":
            continue
        if key in _LIST_KEYS and isinstance(value, str):
            value = _split_list(key, value)
        if key in _COVARIANCE_KEYS:
            covariance[_COVARIANCE_KEYS[key]] = value
        elif key in _COEFFICIENT_KEYS:
            coefficients[_COEFFICIENT_KEYS[key]] = value
        elif key in _SCENARIO_KEYS:
            scenario[key] = value
        elif key in ScenarioConfig.model_fields:
            run[key] = value
        else:
            raise InvalidScenario(f"Unknown scenario key {key!r}", key=key)
    try:
        return ScenarioConfig(
            scenario=Scenario(covariance=CovarianceSpec(**covariance),
                              coefficients=CoefficientPattern(**coefficients), **scenario),
            **run,
        )
    except ValidationError as e:
        raise InvalidScenario(f"Invalid scenario: {e.errors()[0]['msg']}",
                              errors=[str(err["msg"]) for err in e.errors()])


def load_scenario_config(path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> ScenarioConfig:
    """Read a scenario file; ``overrides`` (e.g. ``reps`` from the command line) win over the file."""
    path = Path(path)
    if not path.is_file():
        raise InputNotFound(f"Scenario file not found: {path}", path=str(path))
    values: Dict[str, Any] = dict(dotenv_values(path))
    values.update({key: value for key, value in (overrides or {}).items() if value is not None})
    config = scenario_config_from_mapping(values)
    logger.info(f"Loaded scenario {config.scenario.name!r} ({config.task.value}, reps={config.reps})")
    return config


def scenario_config_to_mapping(config: ScenarioConfig) -> Dict[str, Any]:
    """Flat form of ``config``, the inverse of ``scenario_config_from_mapping``."""
    scenario = config.scenario
    flat: Dict[str, Any] = {key: getattr(scenario, key) for key in sorted(_SCENARIO_KEYS)}
    for key, attr in _COVARIANCE_KEYS.items():
        flat[key] = getattr(scenario.covariance, attr)
    for key, attr in _COEFFICIENT_KEYS.items():
        flat[key] = getattr(scenario.coefficients, attr)
    for key in ScenarioConfig.model_fields:
        if key != "scenario":
            flat[key] = getattr(config, key)
    return {key: (value.value if isinstance(value, Enum) else value) for key, value in flat.items()}
