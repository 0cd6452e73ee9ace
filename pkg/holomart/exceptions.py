"""Custom exception classes for holomart."""

from typing import Any, List, Optional


class HolomartError(Exception):
    """Base class for all holomart errors."""

    exit_code = 1


class ConfigurationError(HolomartError):
    """Raised when a configuration value or argument violates a precondition."""

    exit_code = 2


class DomainError(ConfigurationError):
    """Raised when a point lies outside the admissible disk (e.g. |z| > r_max)."""


class InputFormatError(HolomartError):
    """Raised when an input file (CSV, path dump) cannot be parsed or validated."""

    exit_code = 2


class InsufficientDataError(HolomartError):
    """Raised when there is not enough data for a fit or estimate."""

    exit_code = 3


class SimulationError(HolomartError):
    """Raised when path simulation fails (too many paths exhaust max_steps)."""

    exit_code = 4

    def __init__(self, message: str, *, exhausted_fraction: Optional[float] = None) -> None:
        super().__init__(message)
        self.exhausted_fraction = exhausted_fraction


class BoundViolationError(HolomartError):
    """Raised when an asserted estimate is violated beyond its tolerance."""

    exit_code = 4

    def __init__(self, message: str, *, report: Any = None) -> None:
        super().__init__(message)
        self.report = report


class CorrectionError(HolomartError):
    """Raised when a step of the correction iteration fails.

    The steps completed before the failure are attached as *history*.
    """

    exit_code = 4

    def __init__(self, message: str, *, history: Optional[List[Any]] = None) -> None:
        super().__init__(message)
        self.history = list(history or [])
