"""
Simulation package: scenario definitions, data generators and the Monte Carlo
harness that aggregates replications into summary tables.
"""

from .generators import (
    covariance_factor,
    logistic_response,
    make_coefficients,
    make_covariance,
    sample_design,
    sample_errors,
)
from .harness import SummaryTable, ScenarioState, prepare_state, run_scenario, summarize
from .scenario import (
    CoefficientKind,
    CoefficientPattern,
    CovarianceKind,
    CovarianceSpec,
    ErrorDistribution,
    ResponseModel,
    Scenario,
    ScenarioConfig,
    Task,
    load_scenario_config,
    scenario_config_from_mapping,
    scenario_config_to_mapping,
)

__all__ = [
    "make_covariance",
    "covariance_factor",
    "sample_design",
    "sample_errors",
    "make_coefficients",
    "logistic_response",
    "SummaryTable",
    "ScenarioState",
    "prepare_state",
    "run_scenario",
    "summarize",
    "CovarianceKind",
    "CovarianceSpec",
    "ErrorDistribution",
    "CoefficientKind",
    "CoefficientPattern",
    "ResponseModel",
    "Scenario",
    "ScenarioConfig",
    "Task",
    "load_scenario_config",
    "scenario_config_from_mapping",
    "scenario_config_to_mapping",
]
