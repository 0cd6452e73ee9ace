"""Correction of a bounded real function by the real part of a bounded analytic one.

One step (:func:`lemma2_step`) stops the holomorphic martingale ``F(z_t)``
when ``|F|`` first exceeds ``lam`` and projects the stopped values back to
the circle. The result ``g`` is bounded by ``lam`` and agrees with ``F`` off
a set whose size decays like ``exp(-lam c1)``.

:func:`correct` iterates the step on dyadically shrinking residuals::

    u_{n+1} = T_{2^-(n+1)}(u_n - Re g_{n+1}),    g = sum_j g_j,    E = ∩_j E_j

with levels ``lam_j`` from :func:`make_schedule`, so that ``u_0 = Re g`` on
``E`` up to the last residual and ``|T \\ E|`` stays below ``eps``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .exceptions import (
    BoundViolationError,
    ConfigurationError,
    CorrectionError,
    HolomartError,
    InsufficientDataError,
)
from .martingale import (
    PathBatch,
    overshoot_summary,
    projection_with_error,
    simulate_paths,
    tail_bound_check,
)
from .maximal import (
    DiskGrid,
    default_level_grid,
    jn_distribution,
    nontangential_max,
    theorem3_pointwise_check,
)
from .models import (
    CalibrationConstants,
    Lemma2Diagnostics,
    PathConfig,
    Schedule,
    StepSummary,
    TailBoundReport,
    TailFit,
    VerificationReport,
)
from .spectral import (
    TWO_PI,
    AnalyticFn,
    BoundaryFn,
    CircleGrid,
    GridMask,
    analytic_completion,
    completion_trace,
    holomorphy_defect,
    riesz_project,
)

logger = logging.getLogger(__name__)

SCHEDULE_CHECK_TOL = 1e-12
MC_SIGMAS = 4.0
SUP_TOLERANCE = 0.05
CALIBRATION_LEVEL_START = 1.5
CALIBRATION_LEVEL_STEP = 0.5


# ---------------------------------------------------------------------------
# Truncation and schedule
# ---------------------------------------------------------------------------


def truncate(h: BoundaryFn, delta: float) -> BoundaryFn:
    """``T_delta``: identity where ``|h| <= delta``, radial clamp to modulus delta elsewhere.

    Clamped complex values are scaled a few ulps inside the circle of radius
    delta so that a second application is the identity.
    """
    if not delta > 0.0:
        raise ConfigurationError("truncation level must be positive")
    v = h.values
    mag = np.abs(v)
    big = mag > delta
    if h.is_real:
        return BoundaryFn(h.grid, np.where(big, np.copysign(delta, v), v), "real")
    inner = delta * (1.0 - 4.0 * np.finfo(float).eps)
    safe = np.where(big, mag, 1.0)
    return BoundaryFn(h.grid, np.where(big, inner * v / safe, v), "complex")


def make_schedule(eps: float, consts: CalibrationConstants, n_max: int = 30) -> Schedule:
    """Levels ``lam_n = (n ln 4 + ln(4 c2 / eps)) / c1`` for ``n = 0..n_max``.

    Each term ``exp(-lam_n c1) c2 2^n`` equals ``(eps/4) 2^-n``, so the full
    series sums to ``eps / 2``.
    """
    if not 0.0 < eps < TWO_PI:
        raise ConfigurationError(f"eps must lie in (0, 2*pi), got {eps}")
    if n_max < 1:
        raise ConfigurationError("a schedule needs n_max >= 1")
    c1, c2 = consts.c1, consts.c2
    offset = math.log(4.0 * c2 / eps)
    n = np.arange(n_max + 1)
    lambdas = (n * math.log(4.0) + offset) / c1
    terms = np.exp(-lambdas * c1) * c2 * 2.0 ** n
    defect_sum = math.fsum(terms)
    defect_tail = (eps / 4.0) * 2.0 ** -n_max
    schedule = Schedule(
        eps=eps,
        c1=c1,
        c2=c2,
        n_max=n_max,
        lambdas=lambdas.tolist(),
        defect_terms=terms.tolist(),
        defect_sum=defect_sum,
        defect_tail=defect_tail,
        lambda_weighted_sum=(2.0 * math.log(4.0) + 2.0 * offset) / c1,
    )
    if abs(schedule.defect_total - eps / 2.0) > SCHEDULE_CHECK_TOL * max(1.0, eps):
        raise BoundViolationError("schedule series does not sum to eps/2", report=schedule)
    return schedule


def residual_constants(consts: CalibrationConstants) -> CalibrationConstants:
    """Tail constants of ``2 u`` given those of ``u``: ``P(F*_{2u} > lam) = P(F*_u > lam / 2)``.

    :func:`correct` runs every step on a residual of sup norm at most 2, so
    its schedule is built from these.
    """
    return consts.model_copy(update={"c1": consts.c1 / 2.0})


def step_seed(seed: int, step: int) -> int:
    """Seed of step *step*, derived from the run seed."""
    return int(np.random.SeedSequence([int(seed), int(step)]).generate_state(1, dtype=np.uint64)[0])


# ---------------------------------------------------------------------------
# Single step
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Lemma2Step:
    g: AnalyticFn
    E: GridMask
    diagnostics: Lemma2Diagnostics
    g_trace: BoundaryFn = field(repr=False)
    std_error: np.ndarray = field(repr=False)
    samples: PathBatch = field(repr=False)


def lemma2_step(
    f: AnalyticFn,
    lam: float,
    eps_step: float,
    cfg: PathConfig,
    *,
    grid: CircleGrid,
    f_boundary: Optional[BoundaryFn] = None,
    strict: bool = True,
    sup_tolerance: float = SUP_TOLERANCE,
) -> Lemma2Step:
    """Stop ``F(z_t)`` at level *lam*, project, and keep the points within *eps_step* of ``f``.

    The projection subtracts the known mean of the unstopped term, so only
    paths where tau fired add Monte Carlo noise. Chebyshev's bound
    ``|T \\ E| <= ||f - g||_1 / eps_step`` is always enforced; with ``strict``
    so are the tail inequality and ``sup|g| <= lam (1 + sup_tolerance)``.

    When the ``F*`` tail of the batch admits a log-linear fit, the defect is
    also compared with ``exp(-lam c1) c2 / eps_step`` for the fitted constants.
    """
    f0 = abs(complex(f.coeffs[0]))
    if not lam > f0:
        raise ConfigurationError(f"lambda={lam:.6g} must exceed |F(0)|={f0:.6g}")
    if not eps_step > 0.0:
        raise ConfigurationError("eps_step must be positive")
    if f_boundary is None:
        f_boundary = f.trace(grid)

    samples = simulate_paths(f, lam, 0j, cfg)
    tail = tail_bound_check(samples, f, lam, strict=strict)
    estimate, se = projection_with_error(samples, grid, use_stopped=True, control=f)
    g = riesz_project(estimate)
    g_trace = g.trace(grid)

    overshoot = overshoot_summary(samples)
    max_se = float(se.max())
    sup = g_trace.sup_norm()
    sup_bound = lam * (1.0 + sup_tolerance)

    diff = np.abs(f_boundary.values - g_trace.values)
    E = GridMask(grid, diff <= eps_step)
    defect = 1.0 - E.normalized_measure
    l1 = float(diff.mean())
    chebyshev = l1 / eps_step

    calibrated = None
    if tail.fit is not None and tail.fit.slope < 0.0:
        calibrated = math.exp(tail.fit.intercept + tail.fit.slope * lam) / eps_step

    diagnostics = Lemma2Diagnostics(
        lam=float(lam),
        eps_step=float(eps_step),
        sup_norm=sup,
        sup_bound=sup_bound,
        max_std_error=max_se,
        defect=defect,
        calibrated_bound=calibrated,
        within_calibrated_bound=None if calibrated is None else defect <= calibrated,
        defect_measure=(~E).measure,
        l1_distance=l1,
        chebyshev_bound=chebyshev,
        exhausted_fraction=samples.exhausted_fraction,
        tail=tail,
        overshoot=overshoot,
    )
    logger.info(
        "lemma2 step: lam=%.4g sup|g|=%.4g (bound %.4g) defect=%.4g l1=%.4g",
        lam, sup, sup_bound, defect, l1,
    )
    if defect > chebyshev * (1.0 + 1e-12) + 1e-15:
        raise BoundViolationError("defect exceeds the Chebyshev bound", report=diagnostics)
    if strict and sup > sup_bound:
        raise BoundViolationError(
            f"sup|g| = {sup:.6g} exceeds lambda (1 + {sup_tolerance:g}) = {sup_bound:.6g}",
            report=diagnostics,
        )
    return Lemma2Step(g=g, E=E, diagnostics=diagnostics, g_trace=g_trace, std_error=se, samples=samples)


# ---------------------------------------------------------------------------
# Calibration
# ---------------------------------------------------------------------------


def calibrate(
    u: BoundaryFn,
    cfg: PathConfig,
    *,
    lambda_grid: Optional[List[float]] = None,
    disk: Optional[DiskGrid] = None,
    aperture: float = 2.0,
) -> Tuple[CalibrationConstants, TailBoundReport, Optional[TailFit]]:
    """Fit ``c1, c2`` from the ``F*`` tail and ``delta0, C0`` from the ``f#`` tail of ``u + i u~``.

    Inputs whose tails vanish before four levels are covered fall back to
    constants that hold trivially for a bounded function (``bounded=True``).
    """
    grid = u.grid
    f = analytic_completion(u)
    samples = simulate_paths(f, None, 0j, cfg)
    f_star_max = float(np.nanmax(samples.valid().f_star))
    if lambda_grid is None:
        start = max(CALIBRATION_LEVEL_START, abs(complex(f.coeffs[0])) + CALIBRATION_LEVEL_STEP)
        lambda_grid = np.arange(start, f_star_max, CALIBRATION_LEVEL_STEP).tolist()
    tail = tail_bound_check(samples, f, None, lambda_grid, strict=False)
    bounded = False
    if tail.fit is not None and tail.fit.slope < 0.0:
        c1, c2 = -tail.fit.slope, math.exp(tail.fit.intercept)
    else:
        c1, c2, bounded = 1.0, math.exp(f_star_max), True

    disk = disk or DiskGrid.default(grid, r_max=cfg.r_exit)
    f_sharp = nontangential_max(f, disk, aperture)
    jn_fit = None
    try:
        jn_fit = jn_distribution(f_sharp, default_level_grid(f_sharp))
    except InsufficientDataError:
        logger.warning("f# tail too short for a fit; using bounded-case constants")
    if jn_fit is not None and jn_fit.slope < 0.0:
        delta0, C0 = -jn_fit.slope, math.exp(jn_fit.intercept)
    else:
        delta0, C0, bounded = 1.0, TWO_PI * math.exp(float(f_sharp.values.max())), True

    consts = CalibrationConstants(c1=c1, c2=c2, delta0=delta0, C0=C0, bounded=bounded)
    logger.info("calibrated c1=%.4g c2=%.4g delta0=%.4g C0=%.4g bounded=%s", c1, c2, delta0, C0, bounded)
    return consts, tail, jn_fit


# ---------------------------------------------------------------------------
# Iteration
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StepRecord:
    index: int
    g_j: AnalyticFn
    E_j: GridMask
    lambda_j: float
    lambda_used: float
    sup_residual_on_E: float
    bad_measure: float
    seed: int
    scale: float
    sup_norm: float
    mc_tolerance: float
    diagnostics: Lemma2Diagnostics
    std_error: np.ndarray = field(repr=False)

    @property
    def sup_bound(self) -> float:
        return self.lambda_j * 2.0 ** -self.index

    @property
    def tail_report(self) -> TailBoundReport:
        return self.diagnostics.tail

    def summary(self) -> StepSummary:
        return StepSummary(
            index=self.index,
            lambda_j=self.lambda_j,
            lambda_used=self.lambda_used,
            seed=self.seed,
            scale=self.scale,
            sup_norm=self.sup_norm,
            sup_bound=self.sup_bound,
            defect=1.0 - self.E_j.normalized_measure,
            sup_residual_on_E=self.sup_residual_on_E,
            mc_tolerance=self.mc_tolerance,
        )


@dataclass(frozen=True, eq=False)
class CorrectionResult:
    g: AnalyticFn
    E: GridMask
    steps: List[StepRecord]
    final_defect: float
    max_agreement_error: float
    scale: float
    schedule: Schedule
    eps: float
    stop_tol: float
    last_residual: BoundaryFn = field(repr=False)
    r_exit: float = 1.0

    @property
    def input_grid(self) -> CircleGrid:
        return self.E.grid


def _max_on(mask: GridMask, values: np.ndarray) -> float:
    return float(np.max(values[mask.members])) if mask.count else 0.0


def correct(
    u0: BoundaryFn,
    eps: float,
    cfg: PathConfig,
    consts: CalibrationConstants,
    stop_tol: float,
    *,
    schedule: Optional[Schedule] = None,
    strict: bool = True,
) -> CorrectionResult:
    """Find ``g`` analytic and ``E`` with ``|u0 - Re g| <= 2 stop_tol`` on ``E``.

    The input is rescaled to unit sup norm first and ``g`` is scaled back.
    Step ``j = n + 1`` works on ``2^j u_n`` (sup norm <= 2) at level
    ``lam_j`` with tolerance 1, then divides by ``2^j``; this gives
    ``||g_j|| <= lam_j 2^-j`` and ``|u_n + i u_n~ - g_j| <= 2^-j`` on ``E_j``.
    Without an explicit *schedule* the levels come from
    :func:`residual_constants`, the tail constants of those residuals.
    """
    if not u0.is_real:
        raise ConfigurationError("correct needs a real-valued input")
    if not 0.0 < stop_tol < 1.0:
        raise ConfigurationError("stop_tol must lie in (0, 1)")
    grid = u0.grid
    n_needed = int(math.ceil(-math.log2(stop_tol))) + 1
    if schedule is None:
        schedule = make_schedule(eps, residual_constants(consts), n_max=max(n_needed, 2))

    scale = u0.sup_norm()
    g_total = AnalyticFn.constant(0.0)
    E = GridMask.full(grid)
    steps: List[StepRecord] = []
    if scale == 0.0:
        logger.info("zero input: nothing to correct")
        return CorrectionResult(g_total, E, steps, 0.0, 0.0, 1.0, schedule, eps, stop_tol, u0, cfg.r_exit)

    u = u0 / scale
    n = 0
    while 2.0 ** -n >= stop_tol:
        j = n + 1
        if j > schedule.n_max:
            logger.warning("schedule exhausted after %d steps", n)
            break
        s = 2.0 ** j
        residual = u * s
        f = analytic_completion(residual)
        lam_j = schedule.lambdas[j]
        seed = step_seed(cfg.seed, j)
        try:
            step = lemma2_step(
                f, lam_j, 1.0, cfg.with_seed(seed),
                grid=grid, f_boundary=completion_trace(residual), strict=strict,
            )
        except HolomartError as exc:
            raise CorrectionError(f"step {j} failed: {exc}", history=steps) from exc

        g_j = step.g / s
        h = u - g_j.trace(grid).real_part()
        u_next = truncate(h, 2.0 ** -j)
        record = StepRecord(
            index=j,
            g_j=g_j,
            E_j=step.E,
            lambda_j=lam_j,
            lambda_used=lam_j,
            sup_residual_on_E=_max_on(step.E, np.abs(h.values)),
            bad_measure=(~step.E).measure,
            seed=seed,
            scale=s,
            sup_norm=step.diagnostics.sup_norm / s,
            mc_tolerance=MC_SIGMAS * step.diagnostics.max_std_error / s,
            diagnostics=step.diagnostics,
            std_error=step.std_error / s,
        )
        steps.append(record)
        logger.info(
            "step %d: lam_j=%.4g sup|g_j|=%.4g defect_j=%.4g residual=%.4g",
            j, lam_j, record.sup_norm, 1.0 - step.E.normalized_measure, u_next.sup_norm(),
        )
        g_total = g_total + g_j
        E = E & step.E
        u = u_next
        n += 1

    g = g_total * scale
    agreement = np.abs(u0.values - g.trace(grid).values.real)
    result = CorrectionResult(
        g=g,
        E=E,
        steps=steps,
        final_defect=1.0 - E.normalized_measure,
        max_agreement_error=_max_on(E, agreement),
        scale=scale,
        schedule=schedule,
        eps=eps,
        stop_tol=stop_tol,
        last_residual=u * scale,
        r_exit=cfg.r_exit,
    )
    if E.count == 0:
        logger.warning("agreement set is empty")
    return result


# ---------------------------------------------------------------------------
# Audit
# ---------------------------------------------------------------------------


def verify_result(
    u0: BoundaryFn,
    result: CorrectionResult,
    lambda_check: Optional[float] = None,
    *,
    disk: Optional[DiskGrid] = None,
    defect_tolerance: float = 0.005,
    norm_factor: float = 1.05,
) -> VerificationReport:
    """Recompute every claim about *result* from scratch and flag violations."""
    grid = u0.grid
    checks = {}
    values = {}
    messages = []

    g_trace = result.g.trace(grid)
    agreement = _max_on(result.E, np.abs(u0.values - g_trace.values.real))
    mc_total = sum(s.mc_tolerance for s in result.steps) * result.scale
    agreement_bound = 2.0 * result.stop_tol * result.scale + 2.0 * mc_total
    checks["agreement"] = agreement <= agreement_bound
    values["max_agreement_error"] = agreement
    values["agreement_bound"] = agreement_bound

    defect = 1.0 - result.E.normalized_measure
    checks["defect"] = defect <= result.eps / TWO_PI + defect_tolerance
    values["final_defect"] = defect

    intersection = GridMask.full(grid)
    bad_total = 0
    for s in result.steps:
        intersection = intersection & s.E_j
        bad_total += grid.n - s.E_j.count
    checks["mask_intersection"] = intersection == result.E
    checks["measure_bookkeeping"] = grid.n - result.E.count <= bad_total

    norms_ok = True
    for s in result.steps:
        bound = s.sup_bound * norm_factor
        if s.g_j.sup_norm(grid) > bound:
            norms_ok = False
            messages.append(f"step {s.index}: sup|g_j| above {bound:.4g}")
    checks["step_norms"] = norms_ok

    hol = holomorphy_defect(result.g, grid)
    hol_ok = result.g.degree < grid.n // 2 and hol <= 1e-12 * max(1.0, g_trace.sup_norm())
    checks["holomorphy"] = bool(hol_ok)
    values["holomorphy_defect"] = hol
    if not hol_ok:
        messages.append("g carries negative-frequency content on the grid")

    if result.steps and result.scale > 0.0:
        # the first step ran on u0 rescaled by first.scale / result.scale
        first = result.steps[0]
        lam = first.lambda_used if lambda_check is None else float(lambda_check)
        t3 = theorem3_pointwise_check(
            analytic_completion(u0 * (first.scale / result.scale)),
            (first.g_j * first.scale).trace(grid),
            lam,
            disk or DiskGrid.default(grid),
            mc_tolerance=MC_SIGMAS * first.scale * first.std_error,
            reference_radius=result.r_exit ** 2,
        )
        values["theorem3_level_measure"] = t3.level_measure
        if t3.ratio_p99 is not None:
            values["theorem3_ratio_p99"] = t3.ratio_p99
        if lambda_check is None:
            checks["theorem3_zero_region"] = t3.zero_region_ok

    checks = {k: bool(v) for k, v in checks.items()}
    report = VerificationReport(checks=checks, values=values, messages=messages)
    if not report.passed:
        logger.warning("verification failed: %s", [k for k, v in checks.items() if not v])
    return report


def result_report(
    result: CorrectionResult,
    verification: Optional[VerificationReport] = None,
    config: Optional[Dict[str, Any]] = None,
    consts: Optional[CalibrationConstants] = None,
) -> Dict[str, Any]:
    """JSON-ready report; with the embedded config and constants any step can be re-run."""
    report: Dict[str, Any] = {
        "schedule": result.schedule.model_dump(mode="json"),
        "steps": [s.summary().model_dump(mode="json") for s in result.steps],
        "final_defect": result.final_defect,
        "max_agreement_error": result.max_agreement_error,
        "scale": result.scale,
        "eps": result.eps,
        "stop_tol": result.stop_tol,
        "seeds": [s.seed for s in result.steps],
        "degree": result.g.degree,
        "n_steps": len(result.steps),
    }
    if verification is not None:
        report["verification"] = verification.model_dump(mode="json")
        report["passed"] = verification.passed
    if config is not None:
        report["config"] = dict(config)
    if consts is not None:
        report["constants"] = consts.model_dump(mode="json")
    return report
