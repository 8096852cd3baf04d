"""
Error hierarchy shared by every subpackage.

Library code raises these; the CLI and the simulation harness catch
``HDInferError`` and turn it into an error JSON or an excluded replication.
"""

from typing import Any, Dict, Optional


class HDInferError(Exception):
    """Base class for all library errors."""

    def __init__(self, message: str = "", **details: Any):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__
        self.details = details

    @property
    def code(self) -> str:
        return self.__class__.__name__

    def to_dict(self) -> Dict[str, Any]:
        """Machine-readable form used by the CLI error report."""
        payload: Dict[str, Any] = {"error": self.code, "message": self.message}
        for key, value in self.details.items():
            if isinstance(value, (str, int, float, bool, list, dict)) or value is None:
                payload[key] = value
        return payload


# Input and data errors

class InputNotFound(HDInferError):
    pass


class DimensionMismatch(HDInferError):
    pass


class NonFinite(HDInferError):
    pass


class ConstantColumn(HDInferError):
    def __init__(self, column: int):
        super().__init__(f"Column {column} has zero sample variance", column=column)
        self.column = column


# Solver errors

class Underdetermined(HDInferError):
    pass


class DidNotConverge(HDInferError):
    """Raised in strict mode; ``partial`` holds the last iterate."""

    def __init__(self, message: str, partial: Any = None):
        super().__init__(message)
        self.partial = partial


class NoFixedPoint(HDInferError):
    def __init__(self, message: str, last_iterate: float):
        super().__init__(message, last_iterate=last_iterate)
        self.last_iterate = last_iterate


class DegenerateVariance(HDInferError):
    pass


class SaturatedFit(HDInferError):
    pass


class DegenerateTau(HDInferError):
    def __init__(self, column: int, tau_sq: float):
        super().__init__(f"Nodewise residual scale {tau_sq:.3e} for column {column} is degenerate",
                         column=column, tau_sq=tau_sq)
        self.column = column
        self.tau_sq = tau_sq


class PrecisionEstimateError(HDInferError):
    """Collects the per-column failures of a nodewise sweep."""

    def __init__(self, errors: Dict[int, HDInferError]):
        columns = sorted(errors)
        super().__init__(f"Nodewise regression failed for columns {columns}", columns=columns)
        self.errors = errors


class NonPositiveWeight(HDInferError):
    pass


# Inference errors

class EmptyGroup(HDInferError):
    pass


class GroupMismatch(HDInferError):
    pass


class GroupOutOfRange(HDInferError):
    pass


class InvalidAlpha(HDInferError):
    def __init__(self, alpha: float):
        super().__init__(f"alpha must lie in (0, 1), got {alpha}", alpha=alpha)


class EmptyTruth(HDInferError):
    pass


class DegenerateSplit(HDInferError):
    pass


# Simulation and configuration errors

class NotPositiveDefinite(HDInferError):
    pass


class InvalidScenario(HDInferError):
    pass


class InvalidConfig(HDInferError):
    pass


class ReplicationFailure(HDInferError):
    def __init__(self, failures: int, reps: int, last_error: Optional[str] = None):
        super().__init__(f"{failures} of {reps} replications failed", failures=failures, reps=reps,
                         last_error=last_error)
        self.failures = failures
        self.reps = reps
