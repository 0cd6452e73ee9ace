"""Monte Carlo engine for complex Brownian motion in the disk.

Paths follow the Euler scheme ``z_{k+1} = z_k + sqrt(dt) (xi_1 + i xi_2)``
until ``|z_k| >= r_exit`` (the exit time sigma_r). Along the way the engine
tracks the analytic function ``F(z_k)``: the first index with ``|F| > lam``
(the stopping time tau), the stopped value ``F(z_{tau ^ sigma})`` and the
running maximum ``F*``. Estimators downstream are pure functions of the
collected :class:`PathBatch`.

Every path draws its Gaussians from its own Philox stream keyed by
``(seed, path_index)``; the Philox counter plays the role of the step
index. A path therefore produces the same numbers whichever block or worker
simulates it, and aggregates are reduced in path order.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from .exceptions import ConfigurationError, InsufficientDataError, SimulationError, BoundViolationError
from .models import (
    BalayageEstimate,
    ExitLawReport,
    ExitTimeReport,
    MeasureEstimate,
    OvershootSummary,
    PathConfig,
    TailBoundReport,
)
from .spectral import TWO_PI, AnalyticFn, BoundaryFn, CircleGrid, poisson_kernel
from .stats import fit_log_tail, mean_and_std_error, proportion

logger = logging.getLogger(__name__)

MAX_EXHAUSTED_FRACTION = 1e-3
BLOCK_PATHS = 512
PROJECTION_BLOCK = 256

Evaluator = Callable[[np.ndarray], np.ndarray]
Visitor = Callable[[np.ndarray, np.ndarray, np.ndarray], None]


# ---------------------------------------------------------------------------
# Samples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PathSample:
    """Outcome of one simulated path."""

    path_index: int
    exit_point: complex
    stopped_value: complex
    terminal_value: complex
    tau_point: complex
    tau_fired: bool
    f_star: float
    n_steps: int
    exhausted: bool = False


@dataclass(frozen=True, eq=False)
class PathBatch:
    """Struct-of-arrays collection of :class:`PathSample`, ordered by path index."""

    path_index: np.ndarray = field(repr=False)
    exit_point: np.ndarray = field(repr=False)
    stopped_value: np.ndarray = field(repr=False)
    terminal_value: np.ndarray = field(repr=False)
    tau_point: np.ndarray = field(repr=False)
    tau_fired: np.ndarray = field(repr=False)
    f_star: np.ndarray = field(repr=False)
    n_steps: np.ndarray = field(repr=False)
    exhausted: np.ndarray = field(repr=False)
    lam: float = math.inf
    start: complex = 0j
    dt: float = 1e-4
    r_exit: float = 1.0 - 2.0 ** -10
    seed: int = 0

    _ARRAYS = (
        "path_index",
        "exit_point",
        "stopped_value",
        "terminal_value",
        "tau_point",
        "tau_fired",
        "f_star",
        "n_steps",
        "exhausted",
    )

    def __len__(self) -> int:
        return int(self.path_index.size)

    def sample(self, i: int) -> PathSample:
        return PathSample(
            path_index=int(self.path_index[i]),
            exit_point=complex(self.exit_point[i]),
            stopped_value=complex(self.stopped_value[i]),
            terminal_value=complex(self.terminal_value[i]),
            tau_point=complex(self.tau_point[i]),
            tau_fired=bool(self.tau_fired[i]),
            f_star=float(self.f_star[i]),
            n_steps=int(self.n_steps[i]),
            exhausted=bool(self.exhausted[i]),
        )

    def __iter__(self) -> Iterator[PathSample]:
        return (self.sample(i) for i in range(len(self)))

    def _meta(self) -> dict:
        return dict(lam=self.lam, start=self.start, dt=self.dt, r_exit=self.r_exit, seed=self.seed)

    def select(self, mask: np.ndarray) -> "PathBatch":
        return PathBatch(**{name: getattr(self, name)[mask] for name in self._ARRAYS}, **self._meta())

    def valid(self) -> "PathBatch":
        """Paths that reached sigma_r within max_steps."""
        if not self.exhausted.any():
            return self
        return self.select(~self.exhausted)

    @property
    def exhausted_fraction(self) -> float:
        return float(self.exhausted.mean()) if len(self) else 0.0

    @classmethod
    def concat(cls, parts: Sequence["PathBatch"]) -> "PathBatch":
        if not parts:
            raise InsufficientDataError("no path blocks to concatenate")
        arrays = {name: np.concatenate([getattr(p, name) for p in parts]) for name in cls._ARRAYS}
        return cls(**arrays, **parts[0]._meta())


# ---------------------------------------------------------------------------
# Randomness and evaluation
# ---------------------------------------------------------------------------


def path_generator(seed: int, path_index: int) -> np.random.Generator:
    """Philox stream for one path, keyed by ``seed | path_index << 64``."""
    return np.random.Generator(np.random.Philox(key=int(seed) | (int(path_index) << 64)))


class DiskTable:
    """Values of an analytic function on a polar grid, interpolated bilinearly.

    The radius ladder is uniform on [0, 1/2) and geometric in ``1 - r`` from
    1/2 up to *r_max*, so it is densest where the function varies fastest.
    Each circle is filled with one inverse FFT.
    """

    def __init__(self, F: AnalyticFn, r_max: float, *, oversample: int = 4,
                 n_inner: int = 32, n_outer: int = 160) -> None:
        m = F.degree
        self.n_angles = 1 << max(10, int(math.ceil(math.log2(oversample * (m + 1)))))
        inner = np.linspace(0.0, 0.5, n_inner, endpoint=False)
        outer = 1.0 - 0.5 * np.geomspace(1.0, (1.0 - r_max) / 0.5, n_outer)
        self.radii = np.concatenate([inner, outer])
        padded = np.zeros((self.radii.size, self.n_angles), dtype=complex)
        padded[:, : m + 1] = F.coeffs[None, :] * self.radii[:, None] ** np.arange(m + 1)[None, :]
        self.values = self.n_angles * np.fft.ifft(padded, axis=1)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        rho = np.abs(z)
        i = np.clip(np.searchsorted(self.radii, rho, side="right") - 1, 0, self.radii.size - 2)
        r0 = self.radii[i]
        w = np.clip((rho - r0) / (self.radii[i + 1] - r0), 0.0, 1.0)
        t = np.mod(np.angle(z), TWO_PI) / TWO_PI * self.n_angles
        j = np.floor(t)
        a = t - j
        j = j.astype(np.int64) % self.n_angles
        j1 = (j + 1) % self.n_angles
        v = self.values
        lower = (1.0 - a) * v[i, j] + a * v[i, j1]
        upper = (1.0 - a) * v[i + 1, j] + a * v[i + 1, j1]
        return (1.0 - w) * lower + w * upper


def evaluator(F: AnalyticFn, cfg: PathConfig) -> Evaluator:
    """Horner's rule for low degrees, a :class:`DiskTable` otherwise."""
    if F.degree <= cfg.exact_degree:
        return F.evaluate
    logger.debug("degree %d above %d: evaluating along paths through a polar table", F.degree, cfg.exact_degree)
    return DiskTable(F, cfg.r_exit, oversample=cfg.table_oversample)


# ---------------------------------------------------------------------------
# Path kernel
# ---------------------------------------------------------------------------


def _walk_block(
    indices: np.ndarray, start: complex, cfg: PathConfig, visit: Visitor
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Walk the paths *indices* in lockstep until each leaves the disk of radius r_exit.

    ``visit(rows, points, inside)`` sees every chunk: ``points[k, s]`` is step
    ``s`` of path ``rows[k]`` and ``inside`` marks the steps before its exit.
    Returns the radially projected exit points, the exit step counts and the
    exhausted flags.
    """
    b = indices.size
    gens = [path_generator(cfg.seed, i) for i in indices]
    z = np.full(b, start, dtype=complex)
    exit_point = np.full(b, np.nan + 0j)
    n_steps = np.zeros(b, dtype=np.int64)
    done = np.zeros(b, dtype=bool)
    exhausted = np.zeros(b, dtype=bool)
    scale = math.sqrt(cfg.dt)
    steps = 0
    while not done.all():
        rows = np.flatnonzero(~done)
        length = min(cfg.chunk, cfg.max_steps - steps)
        if length <= 0:
            exhausted[rows] = True
            break
        xi = np.stack([gens[r].standard_normal((length, 2)) for r in rows])
        pts = z[rows, None] + np.cumsum(scale * (xi[..., 0] + 1j * xi[..., 1]), axis=1)
        outside = np.abs(pts) >= cfg.r_exit
        exits = outside.any(axis=1)
        first = np.where(exits, outside.argmax(axis=1), length)
        inside = np.arange(length)[None, :] < first[:, None]
        visit(rows, pts, inside)
        k = np.flatnonzero(exits)
        if k.size:
            p = pts[k, first[k]]
            exit_point[rows[k]] = cfg.r_exit * p / np.abs(p)
            n_steps[rows[k]] = steps + first[k] + 1
            done[rows[k]] = True
        z[rows] = pts[:, -1]
        steps += length
    return exit_point, n_steps, exhausted


def _simulate_block(F_eval: Evaluator, lam: float, start: complex, cfg: PathConfig,
                    indices: np.ndarray) -> PathBatch:
    b = indices.size
    f0 = complex(F_eval(np.array([start], dtype=complex))[0])
    f_star = np.full(b, abs(f0))
    fired = np.zeros(b, dtype=bool)
    stopped = np.full(b, np.nan + 0j)
    tau_point = np.full(b, np.nan + 0j)
    if abs(f0) > lam:
        fired[:] = True
        stopped[:] = f0
        tau_point[:] = start

    def visit(rows: np.ndarray, pts: np.ndarray, inside: np.ndarray) -> None:
        vals = F_eval(pts)
        mods = np.abs(vals)
        f_star[rows] = np.maximum(f_star[rows], np.where(inside, mods, -np.inf).max(axis=1))
        over = inside & (mods > lam)
        new = over.any(axis=1) & ~fired[rows]
        if new.any():
            k = np.flatnonzero(new)
            s = over[k].argmax(axis=1)
            tau_point[rows[k]] = pts[k, s]
            stopped[rows[k]] = vals[k, s]
            fired[rows[k]] = True

    exit_point, n_steps, exhausted = _walk_block(indices, start, cfg, visit)
    ok = ~exhausted
    terminal = np.full(b, np.nan + 0j)
    if ok.any():
        terminal[ok] = F_eval(exit_point[ok])
        f_star[ok] = np.maximum(f_star[ok], np.abs(terminal[ok]))
    # tau did not fire before sigma: the stopped process ends at z_sigma
    late = ok & ~fired
    stopped[late] = terminal[late]
    tau_point[late] = exit_point[late]
    f_star[exhausted] = np.nan
    return PathBatch(
        path_index=indices.astype(np.int64),
        exit_point=exit_point,
        stopped_value=stopped,
        terminal_value=terminal,
        tau_point=tau_point,
        tau_fired=fired & ok,
        f_star=f_star,
        n_steps=n_steps,
        exhausted=exhausted,
        lam=float(lam),
        start=complex(start),
        dt=cfg.dt,
        r_exit=cfg.r_exit,
        seed=cfg.seed,
    )


def _check_start(start: complex, cfg: PathConfig) -> complex:
    start = complex(start)
    if abs(start) >= cfg.r_exit:
        raise ConfigurationError(f"start point must satisfy |start| < r_exit={cfg.r_exit}")
    return start


def _blocks(first_index: int, n_paths: int) -> List[np.ndarray]:
    idx = np.arange(first_index, first_index + n_paths, dtype=np.int64)
    return [idx[i : i + BLOCK_PATHS] for i in range(0, n_paths, BLOCK_PATHS)]


def _run_blocks(fn: Callable[[np.ndarray], object], blocks: List[np.ndarray], workers: int) -> list:
    if workers == 1 or len(blocks) == 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, blocks))


def simulate_path(F: AnalyticFn, lam: float, start: complex, cfg: PathConfig, path_index: int) -> PathSample:
    """Simulate the single path *path_index*; identical to its entry in a batch."""
    start = _check_start(start, cfg)
    lam = math.inf if lam is None else float(lam)
    block = _simulate_block(evaluator(F, cfg), lam, start, cfg, np.array([path_index], dtype=np.int64))
    return block.sample(0)


def simulate_paths(
    F: AnalyticFn,
    lam: Optional[float],
    start: complex,
    cfg: PathConfig,
    *,
    first_index: int = 0,
    strict: bool = True,
) -> PathBatch:
    """Simulate ``cfg.n_paths`` paths, split into blocks across ``cfg.workers`` threads.

    Raises :class:`SimulationError` when ``strict`` and at least 0.1% of the
    paths exhaust ``cfg.max_steps``.
    """
    start = _check_start(start, cfg)
    lam = math.inf if lam is None else float(lam)
    if not lam >= 0.0:
        raise ConfigurationError("lambda must be nonnegative")
    F_eval = evaluator(F, cfg)
    parts = _run_blocks(
        lambda b: _simulate_block(F_eval, lam, start, cfg, b),
        _blocks(first_index, cfg.n_paths),
        cfg.workers,
    )
    batch = PathBatch.concat(parts)
    frac = batch.exhausted_fraction
    logger.debug(
        "simulated %d paths (lambda=%s, seed=%d): %.3f%% tau fired, %.4f%% exhausted",
        len(batch), lam, cfg.seed, 100.0 * batch.tau_fired.mean(), 100.0 * frac,
    )
    if frac > 0.0:
        logger.warning("%d paths exceeded max_steps=%d and were discarded", int(batch.exhausted.sum()), cfg.max_steps)
    if strict and frac >= MAX_EXHAUSTED_FRACTION:
        raise SimulationError(
            f"{100.0 * frac:.3f}% of paths exceeded max_steps={cfg.max_steps}",
            exhausted_fraction=frac,
        )
    return batch


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------


def projection_with_error(
    samples: PathBatch,
    grid: CircleGrid,
    use_stopped: bool = True,
    *,
    control: Optional[AnalyticFn] = None,
) -> Tuple[BoundaryFn, np.ndarray]:
    """Monte Carlo ``N``: mean of ``value * P_theta(exit_point)`` and its pointwise standard error.

    With ``control=F`` (the function the batch was simulated with, paths
    started at 0) the estimator uses the exact mean of the unstopped term,
    ``E[F(z_sigma) P_theta(z_sigma)] = F(r_exit^2 e^{i theta})``, and only
    averages ``(F(z_sigma) - G) P_theta(z_sigma)``. That term vanishes on
    every path where tau did not fire.
    """
    s = samples.valid()
    n_paths = len(s)
    if n_paths == 0:
        raise InsufficientDataError("projection needs at least one path")
    if control is not None:
        if s.start != 0j:
            raise ConfigurationError("the projection control variate needs paths started at 0")
        base = projection_target(control, grid, s.r_exit).values
        if not use_stopped:
            return BoundaryFn(grid, base, "complex"), np.zeros(grid.n)
        fired = np.flatnonzero(s.tau_fired)
        exit_point = s.exit_point[fired]
        values = s.terminal_value[fired] - s.stopped_value[fired]
        sign = -1.0
    else:
        base = np.zeros(grid.n, dtype=complex)
        exit_point = s.exit_point
        values = s.stopped_value if use_stopped else s.terminal_value
        sign = 1.0
    theta = grid.points[None, :]
    total = np.zeros(grid.n, dtype=complex)
    total_sq = np.zeros(grid.n)
    for i in range(0, values.size, PROJECTION_BLOCK):
        z = exit_point[i : i + PROJECTION_BLOCK, None]
        x = values[i : i + PROJECTION_BLOCK, None] * poisson_kernel(theta, z)
        total += x.sum(axis=0)
        total_sq += (np.abs(x) ** 2).sum(axis=0)
    # paths outside the sparse set contribute exact zeros
    mean = total / n_paths
    if n_paths > 1:
        var = np.maximum(total_sq - n_paths * np.abs(mean) ** 2, 0.0) / (n_paths - 1)
        se = np.sqrt(var / n_paths)
    else:
        se = np.zeros(grid.n)
    return BoundaryFn(grid, base + sign * mean, "complex"), se


def estimate_projection(samples: PathBatch, grid: CircleGrid, use_stopped: bool = True, *,
                        control: Optional[AnalyticFn] = None) -> BoundaryFn:
    return projection_with_error(samples, grid, use_stopped, control=control)[0]


def projection_target(F: AnalyticFn, grid: CircleGrid, r_exit: float) -> BoundaryFn:
    """Exact mean of the projection estimator at finite radius: ``F(r_exit^2 e^{i theta})``."""
    return F.on_circle(grid, r_exit ** 2)


def harmonic_measure(
    A: Callable[[np.ndarray], np.ndarray], start: complex, cfg: PathConfig, *, first_index: int = 0
) -> MeasureEstimate:
    """Fraction of paths visiting ``A`` before (or at) their exit.

    ``A`` maps an array of disk points to a boolean array of the same shape.
    """
    start = _check_start(start, cfg)
    in_start = bool(np.asarray(A(np.array([start])))[0])

    def run(indices: np.ndarray) -> np.ndarray:
        hit = np.full(indices.size, in_start)

        def visit(rows: np.ndarray, pts: np.ndarray, inside: np.ndarray) -> None:
            hit[rows] |= (np.asarray(A(pts), dtype=bool) & inside).any(axis=1)

        exit_point, _, exhausted = _walk_block(indices, start, cfg, visit)
        ok = ~exhausted
        hit[ok] |= np.asarray(A(exit_point[ok]), dtype=bool)
        return np.where(exhausted, -1, hit.astype(np.int8))

    flags = np.concatenate(_run_blocks(run, _blocks(first_index, cfg.n_paths), cfg.workers))
    valid = flags[flags >= 0]
    if valid.size == 0:
        raise SimulationError("every path exceeded max_steps", exhausted_fraction=1.0)
    value, se = proportion(valid)
    notes = []
    if value == 0.0:
        logger.warning("set was never hit by %d paths at dt=%g", valid.size, cfg.dt)
        notes.append("never_hit")
    if valid.size < flags.size:
        notes.append("exhausted_paths_discarded")
    return MeasureEstimate(value=value, std_error=se, n_samples=int(valid.size), flags=notes)


def exit_law_check(samples: PathBatch, arc: Tuple[float, float], start: Optional[complex] = None,
                   *, n_sigma: float = 4.0) -> ExitLawReport:
    """Fraction of exit angles in ``arc = (a, b)`` against the Poisson integral.

    Exits happen on the circle of radius r_exit, so the reference law is the
    Poisson kernel at ``start / r_exit``.
    """
    a, b = float(arc[0]), float(arc[1])
    if not 0.0 < b - a <= TWO_PI:
        raise ConfigurationError("arc must satisfy 0 < b - a <= 2*pi")
    s = samples.valid()
    if len(s) == 0:
        raise InsufficientDataError("no paths to test the exit law on")
    start = s.start if start is None else complex(start)
    angles = np.mod(np.angle(s.exit_point), TWO_PI)
    inside = np.mod(angles - a, TWO_PI) <= b - a
    if b - a == TWO_PI:
        inside[:] = True
    value, se = proportion(inside)
    z0 = start / s.r_exit
    expected, _ = integrate.quad(lambda psi: poisson_kernel(psi, z0), a, b, limit=200)
    expected /= TWO_PI
    diff = value - expected
    z_score = diff / se if se > 0.0 else (0.0 if abs(diff) < 1e-12 else math.inf)
    return ExitLawReport(
        arc=[a, b],
        estimate=MeasureEstimate(value=value, std_error=se, n_samples=len(s)),
        expected=float(expected),
        z_score=float(z_score),
        within_tolerance=bool(abs(diff) <= n_sigma * se + 1.0 / len(s)),
    )


def exit_time_check(samples: PathBatch) -> ExitTimeReport:
    """Empirical ``E sigma_r`` against ``(r_exit^2 - |start|^2) / 2``."""
    s = samples.valid()
    times = s.n_steps.astype(float) * s.dt
    mean, se = mean_and_std_error(times)
    return ExitTimeReport(
        mean_exit_time=float(mean),
        std_error=float(se),
        expected=(s.r_exit ** 2 - abs(s.start) ** 2) / 2.0,
        n_samples=len(s),
    )


def balayage_from_samples(samples: PathBatch, thetas: Sequence[float]) -> List[BalayageEstimate]:
    """Mean of ``1{tau < sigma} P_theta(z_tau)`` at each angle."""
    s = samples.valid()
    if len(s) == 0:
        raise InsufficientDataError("balayage needs at least one path")
    hit = s.tau_fired
    out = []
    for theta in thetas:
        x = np.where(hit, poisson_kernel(theta, s.tau_point), 0.0)
        mean, se = mean_and_std_error(x)
        out.append(
            BalayageEstimate(
                theta=float(theta),
                value=float(mean),
                std_error=float(se),
                n_samples=len(s),
                hit_fraction=float(hit.mean()),
            )
        )
    return out


def balayage(F: AnalyticFn, lam: float, theta: float, cfg: PathConfig) -> BalayageEstimate:
    """Sweep of the first-entry law of ``{|F| > lam}`` onto the boundary point *theta*."""
    f0 = abs(complex(F.coeffs[0]))
    if not lam > f0:
        raise ConfigurationError(f"lambda={lam} must exceed |F(0)|={f0:.6g}")
    samples = simulate_paths(F, lam, 0j, cfg)
    return balayage_from_samples(samples, [theta])[0]


def overshoot_summary(samples: PathBatch) -> OvershootSummary:
    """Size of ``|F(z_tau)| - lam`` on the paths where tau fired."""
    s = samples.valid()
    over = np.abs(s.stopped_value[s.tau_fired]) - s.lam
    if over.size == 0:
        return OvershootSummary(lam=s.lam, n_fired=0)
    return OvershootSummary(
        lam=s.lam,
        n_fired=int(over.size),
        mean=float(over.mean()),
        p50=float(np.percentile(over, 50)),
        p99=float(np.percentile(over, 99)),
        max=float(over.max()),
    )


def tail_bound_check(
    samples: PathBatch,
    F: AnalyticFn,
    lam: Optional[float],
    lambda_grid: Optional[Sequence[float]] = None,
    *,
    strict: bool = True,
    n_sigma: float = 3.0,
) -> TailBoundReport:
    """Compare ``E|F - G|`` with ``2 E[1{F* > lam} |F|]`` and tabulate ``P(F* > lam)``.

    ``F*`` does not depend on the stopping level, so the tail table is valid
    for any batch. When at least four levels have a nonzero tail, the
    log-linear fit is attached: its slope is ``-c1`` and its intercept ``ln c2``.
    """
    lam = math.inf if lam is None else float(lam)
    if not (math.isinf(lam) and math.isinf(samples.lam)) and not math.isclose(lam, samples.lam):
        raise ConfigurationError(f"samples were stopped at lambda={samples.lam}, not {lam}")
    s = samples.valid()
    if len(s) == 0:
        raise InsufficientDataError("tail check needs at least one path")
    diff = np.abs(s.terminal_value - s.stopped_value)
    rhs_terms = 2.0 * np.where(s.f_star > lam, np.abs(s.terminal_value), 0.0)
    lhs, lhs_se = mean_and_std_error(diff)
    rhs, rhs_se = mean_and_std_error(rhs_terms)
    slack = n_sigma * math.hypot(float(lhs_se), float(rhs_se))
    holds = bool(lhs <= rhs + slack + 1e-12)

    if lambda_grid is None:
        lo = abs(complex(F.coeffs[0]))
        hi = float(np.max(s.f_star))
        lambda_grid = np.linspace(lo, hi, 12)[1:-1] if hi > lo else []
    grid = [float(x) for x in lambda_grid]
    probs = [float(np.mean(s.f_star > x)) for x in grid]
    fit = None
    if grid:
        try:
            fit = fit_log_tail(grid, probs)
        except InsufficientDataError:
            logger.info("F* tail has fewer than 4 nonzero levels; no fit attached")

    report = TailBoundReport(
        lam=None if math.isinf(lam) else lam,
        lhs=float(lhs),
        rhs=float(rhs),
        lhs_std_error=float(lhs_se),
        rhs_std_error=float(rhs_se),
        holds=holds,
        tau_fraction=float(s.tau_fired.mean()),
        tail_lambdas=grid,
        tail_probabilities=probs,
        fit=fit,
    )
    if strict and not holds:
        raise BoundViolationError(
            f"E|F-G| = {lhs:.4g} exceeds 2 E[1(F*>lam)|F|] = {rhs:.4g} by more than {n_sigma} std errors",
            report=report,
        )
    return report
