"""Typed Pydantic models for configurations, calibration constants and reports."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .exceptions import ConfigurationError

R_EXIT_MIN = 0.9
R_EXIT_MAX = 1.0 - 2.0 ** -12
GRID_N_MIN = 8
GRID_N_MAX = 2 ** 22


def parse_model(model_cls: Any, raw: Any) -> Any:
    """Validate a dict into *model_cls*, mapping pydantic errors to ConfigurationError."""
    try:
        return model_cls.model_validate(raw)
    except ValidationError as exc:
        raise ConfigurationError(f"Invalid {model_cls.__name__}: {exc}") from exc


def is_grid_size(n: int) -> bool:
    return GRID_N_MIN <= n <= GRID_N_MAX and n & (n - 1) == 0


# ---------------------------------------------------------------------------
# Simulation configuration
# ---------------------------------------------------------------------------


class PathConfig(BaseModel):
    """Discretization and sampling parameters of the Brownian path engine.

    Parameters
    ----------
    dt:
        Euler step. Each step adds ``sqrt(dt) * (xi1 + i xi2)``.
    r_exit:
        Radius at which the exit time sigma_r fires.
    seed:
        Root key of the counter-based generator (64 bit).
    n_paths:
        Number of paths per batch.
    max_steps:
        Paths still inside after this many steps are discarded and counted.
    chunk:
        Steps drawn per iteration of the batch loop. Part of the numerical
        contract: changing it changes floating point results.
    workers:
        Threads used by :func:`holomart.martingale.simulate_paths`.
        Results do not depend on it.
    exact_degree:
        Analytic functions up to this degree are evaluated by Horner's rule
        along paths; higher degrees go through an interpolation table.
    table_oversample:
        Angular oversampling of the interpolation table relative to the degree.
    """

    model_config = ConfigDict(frozen=True)

    dt: float = 1e-4
    r_exit: float = 1.0 - 2.0 ** -10
    seed: int = 0
    n_paths: int = 20_000
    max_steps: int = 10_000_000
    chunk: int = 256
    workers: int = 1
    exact_degree: int = 64
    table_oversample: int = 4

    @field_validator("dt")
    @classmethod
    def _check_dt(cls, v: float) -> float:
        if not 0.0 < v <= 1e-3:
            raise ValueError("dt must satisfy 0 < dt <= 1e-3")
        return v

    @field_validator("r_exit")
    @classmethod
    def _check_r_exit(cls, v: float) -> float:
        if not R_EXIT_MIN <= v <= R_EXIT_MAX:
            raise ValueError(f"r_exit must lie in [{R_EXIT_MIN}, 1 - 2**-12]")
        return v

    @field_validator("seed")
    @classmethod
    def _check_seed(cls, v: int) -> int:
        if not 0 <= v < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        return v

    @field_validator("n_paths", "max_steps", "chunk", "workers", "table_oversample")
    @classmethod
    def _check_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be a positive integer")
        return v

    def with_seed(self, seed: int) -> "PathConfig":
        return self.model_copy(update={"seed": int(seed)})


# ---------------------------------------------------------------------------
# Estimates produced by the path engine
# ---------------------------------------------------------------------------


class MeasureEstimate(BaseModel):
    value: float
    std_error: float
    n_samples: int
    flags: List[str] = Field(default_factory=list)

    @field_validator("value")
    @classmethod
    def _check_value(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError("a measure estimate lies in [0, 1]")
        return v


class BalayageEstimate(BaseModel):
    theta: float
    value: float
    std_error: float
    n_samples: int
    hit_fraction: float


class ExitLawReport(BaseModel):
    arc: List[float]
    estimate: MeasureEstimate
    expected: float
    z_score: float
    within_tolerance: bool


class ExitTimeReport(BaseModel):
    mean_exit_time: float
    std_error: float
    expected: float
    n_samples: int


class OvershootSummary(BaseModel):
    lam: float
    n_fired: int
    mean: float = 0.0
    p50: float = 0.0
    p99: float = 0.0
    max: float = 0.0


class TailFit(BaseModel):
    """Least-squares fit of log(measure) against level, over nonzero measures only."""

    lambdas: List[float]
    log_measures: List[float]
    slope: float
    intercept: float
    r2: float
    n_used: int
    bounded: bool = False

    @property
    def rate(self) -> float:
        return -self.slope


class TailBoundReport(BaseModel):
    lam: Optional[float]
    lhs: float
    rhs: float
    lhs_std_error: float
    rhs_std_error: float
    holds: bool
    tau_fraction: float
    tail_lambdas: List[float] = Field(default_factory=list)
    tail_probabilities: List[float] = Field(default_factory=list)
    fit: Optional[TailFit] = None


# ---------------------------------------------------------------------------
# Correction
# ---------------------------------------------------------------------------


class CalibrationConstants(BaseModel):
    """Empirical stand-ins for the constants of the tail estimates.

    ``c1``/``c2`` describe ``P(F* > lam) ~ c2 exp(-lam c1)``; ``delta0``/``C0``
    describe ``|{f# > lam}| <= C0 exp(-lam delta0)``. ``delta1`` is always
    ``delta0 / 2`` and ``c3`` defaults to ``delta1``.
    """

    model_config = ConfigDict(frozen=True)

    c1: float = 1.0
    c2: float = 1.0
    delta0: float = 1.0
    delta1: float = 0.5
    c3: float = 0.5
    C0: float = 2.0 * math.pi
    C_bgs: float = 1.0
    bounded: bool = False

    @model_validator(mode="before")
    @classmethod
    def _derive(cls, data: Any) -> Any:
        if isinstance(data, dict):
            data = dict(data)
            delta0 = float(data.get("delta0", 1.0))
            if data.get("delta1") is None:
                data["delta1"] = delta0 / 2.0
            if data.get("c3") is None:
                data["c3"] = data["delta1"]
        return data

    @model_validator(mode="after")
    def _check(self) -> "CalibrationConstants":
        if not math.isclose(self.delta1, self.delta0 / 2.0, rel_tol=1e-12):
            raise ValueError("delta1 must equal delta0 / 2")
        for name in ("c1", "c2", "delta0", "delta1", "c3", "C0", "C_bgs"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")
        return self


class Schedule(BaseModel):
    eps: float
    c1: float
    c2: float
    n_max: int
    lambdas: List[float]
    defect_terms: List[float]
    defect_sum: float
    defect_tail: float
    lambda_weighted_sum: float

    @property
    def defect_total(self) -> float:
        return self.defect_sum + self.defect_tail


class Lemma2Diagnostics(BaseModel):
    lam: float
    eps_step: float
    sup_norm: float
    sup_bound: float
    max_std_error: float
    defect: float
    defect_measure: float
    l1_distance: float
    chebyshev_bound: float
    exhausted_fraction: float
    tail: TailBoundReport
    overshoot: OvershootSummary
    calibrated_bound: Optional[float] = None
    within_calibrated_bound: Optional[bool] = None


class StepSummary(BaseModel):
    index: int
    lambda_j: float
    lambda_used: float
    seed: int
    scale: float
    sup_norm: float
    sup_bound: float
    defect: float
    sup_residual_on_E: float
    mc_tolerance: float


class VerificationReport(BaseModel):
    checks: Dict[str, bool]
    values: Dict[str, float]
    messages: List[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


# ---------------------------------------------------------------------------
# Maximal function diagnostics
# ---------------------------------------------------------------------------


class CarlesonReport(BaseModel):
    heights: List[float]
    sup_omega_ratio: float
    sup_level_ratio: float
    constant: Optional[float]


class Theorem3Report(BaseModel):
    lam: float
    level_measure: float
    n_ratio_points: int
    ratio_p99: Optional[float]
    ratio_max: Optional[float]
    zero_region_points: int
    zero_region_max_error: float
    zero_region_ok: bool
    carleson: Optional[CarlesonReport] = None


class GoodSetReport(BaseModel):
    lam: float
    n_bound: float
    threshold: float
    measure_H: float
    measure_J: float
    measure_not_G: float
    measure_complement_B: float
    tail_bound: float
    weak_type_bound: float
    weak_type_ok: bool
    max_maximal_on_B: float
    maximal_bound_ok: bool


class OscillationReport(BaseModel):
    lambdas: List[float]
    sup_tails: List[float]
    fit: Optional[TailFit]
    bounded: bool
    note: str = (
        "necessary-condition diagnostic for dist(f, Re H-infinity) = 0; "
        "it does not decide the distance"
    )


# ---------------------------------------------------------------------------
# Command-line run configuration
# ---------------------------------------------------------------------------


class RunConfig(BaseModel):
    """All knobs of a CLI run; validated before any compute."""

    model_config = ConfigDict(populate_by_name=True, frozen=True)

    grid_n: int = 4096
    dt: float = 1e-4
    r_exit: float = 1.0 - 2.0 ** -10
    n_paths: int = 20_000
    seed: int = 0
    eps: float = 0.1
    stop_tol: float = 2.0 ** -8
    lam: Optional[float] = Field(None, alias="lambda")
    n_bound: Optional[float] = Field(None, alias="N_bound")
    lambda_grid: Optional[List[float]] = None
    aperture: float = 2.0
    max_steps: int = 10_000_000
    workers: int = 1
    input_path: Optional[Path] = None
    output_dir: Path = Path("holomart-out")
    fixture: str = "square"
    dump_paths: bool = False
    verbose: bool = False

    @field_validator("grid_n")
    @classmethod
    def _check_grid_n(cls, v: int) -> int:
        if not is_grid_size(v):
            raise ValueError("grid_n must be a power of two in [8, 2**22]")
        return v

    @field_validator("eps")
    @classmethod
    def _check_eps(cls, v: float) -> float:
        if not 0.0 < v < 2.0 * math.pi:
            raise ValueError("eps must lie in (0, 2*pi)")
        return v

    @field_validator("stop_tol")
    @classmethod
    def _check_stop_tol(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError("stop_tol must lie in (0, 1)")
        return v

    @field_validator("lam", "n_bound")
    @classmethod
    def _check_positive_optional(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not v > 0.0:
            raise ValueError("must be positive")
        return v

    @field_validator("lambda_grid", mode="before")
    @classmethod
    def _split_grid(cls, v: Any) -> Any:
        if isinstance(v, str):
            return [float(x) for x in v.split(",") if x.strip()]
        return v

    @field_validator("lambda_grid")
    @classmethod
    def _check_grid(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        if v is not None and any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("lambda_grid must be strictly increasing")
        return v

    @field_validator("aperture")
    @classmethod
    def _check_aperture(cls, v: float) -> float:
        if not 1.0 <= v <= 4.0:
            raise ValueError("aperture must lie in [1, 4]")
        return v

    @field_validator("fixture")
    @classmethod
    def _check_fixture(cls, v: str) -> str:
        if v not in {"square", "cosine", "log"}:
            raise ValueError("fixture must be one of square, cosine, log")
        return v

    def path_config(self) -> PathConfig:
        return parse_model(
            PathConfig,
            {
                "dt": self.dt,
                "r_exit": self.r_exit,
                "seed": self.seed,
                "n_paths": self.n_paths,
                "max_steps": self.max_steps,
                "workers": self.workers,
            },
        )


class BGSReport(BaseModel):
    lam: float
    omega: MeasureEstimate
    level_fraction: float
    ratio: float
    within_constant: Optional[bool] = None
