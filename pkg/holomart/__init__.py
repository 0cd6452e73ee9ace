"""Bounded analytic corrections of bounded real functions on the circle."""

__version__ = "0.1.0"

from .exceptions import (
    HolomartError,
    ConfigurationError,
    DomainError,
    InputFormatError,
    InsufficientDataError,
    SimulationError,
    BoundViolationError,
    CorrectionError,
)
from .models import CalibrationConstants, PathConfig, RunConfig
from .spectral import (
    AnalyticFn,
    BoundaryFn,
    CircleGrid,
    GridMask,
    analytic_completion,
    hilbert_transform,
    riesz_project,
)
from .martingale import PathBatch, simulate_path, simulate_paths, estimate_projection
from .correction import CorrectionResult, correct, lemma2_step, make_schedule, truncate, verify_result

__all__ = [
    "HolomartError",
    "ConfigurationError",
    "DomainError",
    "InputFormatError",
    "InsufficientDataError",
    "SimulationError",
    "BoundViolationError",
    "CorrectionError",
    "CalibrationConstants",
    "PathConfig",
    "RunConfig",
    "AnalyticFn",
    "BoundaryFn",
    "CircleGrid",
    "GridMask",
    "analytic_completion",
    "hilbert_transform",
    "riesz_project",
    "PathBatch",
    "simulate_path",
    "simulate_paths",
    "estimate_projection",
    "CorrectionResult",
    "correct",
    "lemma2_step",
    "make_schedule",
    "truncate",
    "verify_result",
]
