"""Maximal functions, level sets and the pointwise estimates built on them.

Arc scans treat a grid arc of ``L`` cells starting at ``s`` as the points
``s, s+1, ..., s+L-1`` (mod n); its average is a difference of prefix sums
divided by ``L``. The Hardy-Littlewood maximal function and the arc cover of
:func:`arc_cover` share that computation, so bounds that hold by construction
hold bit for bit.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.ndimage import maximum_filter1d

from .exceptions import BoundViolationError, ConfigurationError, InsufficientDataError
from .martingale import PathBatch, evaluator, harmonic_measure
from .models import (
    BGSReport,
    CalibrationConstants,
    CarlesonReport,
    GoodSetReport,
    OscillationReport,
    PathConfig,
    TailFit,
    Theorem3Report,
)
from .spectral import (
    R_MAX_DEFAULT,
    BMO_MIN_ARC,
    AnalyticFn,
    BoundaryFn,
    CircleGrid,
    GridMask,
    hilbert_transform,
)
from .stats import MIN_TAIL_POINTS, fit_log_tail

logger = logging.getLogger(__name__)

EXACT_SCAN_MAX_N = 8192


# ---------------------------------------------------------------------------
# Disk discretization
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiskGrid:
    """Circles of radii ``r_0 < ... < r_K <= r_max`` sampled on a common angular grid."""

    base: CircleGrid
    radii: np.ndarray = field(repr=False)
    r_max: float = R_MAX_DEFAULT

    def __post_init__(self) -> None:
        r = np.asarray(self.radii, dtype=float)
        if r.ndim != 1 or r.size == 0:
            raise ConfigurationError("a DiskGrid needs at least one radius")
        if np.any(np.diff(r) <= 0.0) or r[0] < 0.0 or r[-1] > self.r_max or self.r_max >= 1.0:
            raise ConfigurationError("radii must increase strictly within [0, r_max], r_max < 1")
        r = r.copy()
        r.setflags(write=False)
        object.__setattr__(self, "radii", r)

    @classmethod
    def default(cls, grid: CircleGrid, r_max: float = R_MAX_DEFAULT) -> "DiskGrid":
        """The origin plus the ladder ``r_k = 1 - 2^{-k}`` up to *r_max*."""
        radii = [0.0]
        k = 1
        while 1.0 - 2.0 ** -k <= r_max:
            radii.append(1.0 - 2.0 ** -k)
            k += 1
        return cls(grid, np.array(radii), r_max)

    def values(self, F: AnalyticFn) -> np.ndarray:
        """``F(r_k e^{i theta_j})`` as a ``(K+1, n)`` array."""
        return np.stack([F.on_circle(self.base, float(r)).values for r in self.radii])


def _cone_half_width(r: float, aperture: float, cell: float) -> Optional[int]:
    """Cells on each side of the radial point inside ``|z - e^{i theta}| <= a (1 - |z|)``.

    ``None`` means the whole circle of radius r lies in the cone.
    """
    if r == 0.0:
        return None
    q = (1.0 + r * r - (aperture * (1.0 - r)) ** 2) / (2.0 * r)
    if q <= -1.0:
        return None
    phi = math.acos(min(q, 1.0))
    return int(math.floor(phi / cell + 1e-12))


def nontangential_max(F: AnalyticFn, disk: DiskGrid, aperture: float = 2.0) -> BoundaryFn:
    """``f#(theta_j)``: max of ``|F|`` over disk-grid points in the cone at ``e^{i theta_j}``."""
    if not 1.0 <= aperture <= 4.0:
        raise ConfigurationError("aperture must lie in [1, 4]")
    grid = disk.base
    acc = np.abs(F.trace(grid).values)
    widths = []
    for r, row in zip(disk.radii, disk.values(F)):
        mods = np.abs(row)
        w = _cone_half_width(float(r), aperture, grid.cell)
        if w is None or 2 * w + 1 >= grid.n:
            acc = np.maximum(acc, mods.max())
            continue
        widths.append(w)
        acc = np.maximum(acc, maximum_filter1d(mods, size=2 * w + 1, mode="wrap"))
    if widths and max(widths) == 0:
        logger.warning("cones hold only radial points at n=%d; f# falls back to the radial maximum", grid.n)
    return BoundaryFn(grid, acc, "real")


def radial_max(F: AnalyticFn, disk: DiskGrid) -> BoundaryFn:
    vals = np.abs(disk.values(F)).max(axis=0)
    return BoundaryFn(disk.base, np.maximum(vals, np.abs(F.trace(disk.base).values)), "real")


# ---------------------------------------------------------------------------
# Arc scans
# ---------------------------------------------------------------------------


def _prefix(a: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(np.concatenate([a, a]))])


def _arc_averages(prefix: np.ndarray, n: int, length: int) -> np.ndarray:
    s = np.arange(n)
    return (prefix[s + length] - prefix[s]) / length


def _containing_max(x: np.ndarray, length: int) -> np.ndarray:
    """At each j, the max of ``x[s]`` over the starts of length-L arcs containing j."""
    centered = maximum_filter1d(x, size=length, mode="wrap")
    return np.roll(centered, length - 1 - length // 2)


def _arc_lengths(n: int, mode: str) -> Iterable[int]:
    if mode == "exact":
        return range(1, n + 1)
    return [1 << k for k in range(int(math.log2(n)) + 1)]


def _resolve_mode(n: int, mode: str) -> str:
    if mode not in {"auto", "exact", "dyadic"}:
        raise ConfigurationError(f"unknown maximal function mode {mode!r}")
    if mode == "auto":
        mode = "exact" if n <= EXACT_SCAN_MAX_N else "dyadic"
        if mode == "dyadic":
            logger.warning("n=%d above %d: Hardy-Littlewood maximal function over dyadic lengths", n, EXACT_SCAN_MAX_N)
    return mode


def hardy_littlewood(h: BoundaryFn, mode: str = "auto") -> BoundaryFn:
    """Uncentered maximal function ``sup_{I containing theta} (1/|I|) int_I |h|`` over grid arcs."""
    n = h.grid.n
    mode = _resolve_mode(n, mode)
    prefix = _prefix(np.abs(h.values))
    out = np.zeros(n)
    for length in _arc_lengths(n, mode):
        out = np.maximum(out, _containing_max(_arc_averages(prefix, n, length), length))
    return BoundaryFn(h.grid, out, "real")


def arc_cover(mask: GridMask, threshold: float) -> GridMask:
    """Union of all grid arcs ``I`` with ``|mask ∩ I| > threshold |I|``."""
    n = mask.grid.n
    prefix = _prefix(mask.members.astype(float))
    covered = np.zeros(n, dtype=bool)
    for length in range(1, n + 1):
        heavy = (_arc_averages(prefix, n, length) > threshold).astype(np.int8)
        if heavy.any():
            covered |= _containing_max(heavy, length) > 0
    return GridMask(mask.grid, covered)


def indicator(mask: GridMask) -> BoundaryFn:
    return BoundaryFn(mask.grid, mask.members.astype(float), "real")


def level_set(h: BoundaryFn, lam: float) -> GridMask:
    """Grid points with ``h > lam``."""
    if not h.is_real:
        raise ConfigurationError("level sets are taken of real boundary functions")
    return GridMask(h.grid, h.values > lam)


# ---------------------------------------------------------------------------
# Pointwise estimate for the stopped projection
# ---------------------------------------------------------------------------


def carleson_box_diagnostic(
    samples: PathBatch,
    H: GridMask,
    thetas: Sequence[float],
    heights: Sequence[float],
) -> CarlesonReport:
    """Compare ``sup_h omega(S_h)/h`` with ``sup_h |H ∩ 3 I_h| / h``.

    ``omega(S_h)`` is the fraction of paths whose first entry into
    ``{|F| > lam}`` lies in the box ``1 - h <= r < 1, |psi - theta| <= h``.
    """
    s = samples.valid()
    if len(s) == 0:
        raise InsufficientDataError("no paths for the Carleson box diagnostic")
    pts = s.tau_point[s.tau_fired]
    rho = np.abs(pts)
    psi = np.angle(pts)
    grid = H.grid
    h_pts = grid.points[H.members]
    omega_best = 0.0
    level_best = 0.0
    constant = None
    for theta in thetas:
        d_paths = np.abs(np.angle(np.exp(1j * (psi - theta))))
        d_grid = np.abs(np.angle(np.exp(1j * (h_pts - theta))))
        om = max((np.count_nonzero((rho >= 1.0 - h) & (d_paths <= h)) / len(s)) / h for h in heights)
        lv = max(grid.measure(np.count_nonzero(d_grid <= 3.0 * h)) / h for h in heights)
        omega_best = max(omega_best, om)
        level_best = max(level_best, lv)
        if lv > 0.0:
            constant = om / lv if constant is None else max(constant, om / lv)
        elif om > 0.0:
            logger.warning("box mass %.3g at theta=%.4f with no level set nearby", om, theta)
    return CarlesonReport(
        heights=[float(h) for h in heights],
        sup_omega_ratio=float(omega_best),
        sup_level_ratio=float(level_best),
        constant=constant,
    )


def theorem3_pointwise_check(
    f: AnalyticFn,
    g: BoundaryFn,
    lam: float,
    disk: DiskGrid,
    *,
    aperture: float = 2.0,
    mc_tolerance: Union[float, np.ndarray] = 0.0,
    samples: Optional[PathBatch] = None,
    n_box_thetas: int = 64,
    reference_radius: float = 1.0,
) -> Theorem3Report:
    """Ratios ``|f - g| / ((|f| + lam) M_HL(chi_{H_lam}))`` where the maximal factor is positive.

    Where it vanishes, ``|f - g|`` must stay within *mc_tolerance*. ``f`` is
    read on the circle of radius *reference_radius*: a projection estimated
    from exits at ``r_exit`` targets ``F(r_exit^2 e^{i theta})``.
    """
    grid = disk.base
    H = level_set(nontangential_max(f, disk, aperture), lam)
    m = hardy_littlewood(indicator(H)).values
    fb = f.on_circle(grid, reference_radius).values
    err = np.abs(fb - g.values)
    tol = np.broadcast_to(np.asarray(mc_tolerance, dtype=float), err.shape)
    pos = m > 0.0
    ratios = err[pos] / ((np.abs(fb[pos]) + lam) * m[pos])
    zero = ~pos
    zero_err = float(err[zero].max()) if zero.any() else 0.0
    carleson = None
    if samples is not None:
        stride = max(1, grid.n // n_box_thetas)
        heights = [2.0 ** -k for k in range(1, int(math.log2(grid.n)))]
        carleson = carleson_box_diagnostic(samples, H, grid.points[::stride], heights)
    return Theorem3Report(
        lam=float(lam),
        level_measure=H.measure,
        n_ratio_points=int(ratios.size),
        ratio_p99=float(np.percentile(ratios, 99)) if ratios.size else None,
        ratio_max=float(ratios.max()) if ratios.size else None,
        zero_region_points=int(zero.sum()),
        zero_region_max_error=zero_err,
        zero_region_ok=bool(np.all(err[zero] <= tol[zero])),
        carleson=carleson,
    )


# ---------------------------------------------------------------------------
# Good set and tails
# ---------------------------------------------------------------------------


def good_set_B(
    f_sharp: BoundaryFn,
    f_boundary: BoundaryFn,
    N_bound: float,
    consts: CalibrationConstants,
) -> Tuple[float, GridMask, GoodSetReport]:
    """``B = G \\ J`` with ``G = {|f| < N}`` and ``J`` the union of arcs heavy in ``H = {f# > lam}``.

    The level is ``lam = N_bound`` and an arc is heavy when
    ``|H ∩ I| > exp(-lam delta1) |I|``; on B the maximal function of
    ``chi_H`` is then at most that threshold.
    """
    if not N_bound > 0.0:
        raise ConfigurationError("N_bound must be positive")
    grid = f_sharp.grid
    lam = float(N_bound)
    threshold = math.exp(-lam * consts.delta1)
    H = level_set(f_sharp, lam)
    G = GridMask(grid, np.abs(f_boundary.values) < N_bound)
    if G.count == 0:
        raise ConfigurationError(f"G = {{|f| < {N_bound}}} is empty")
    J = arc_cover(H, threshold)
    B = G - J
    m = hardy_littlewood(indicator(H), mode="exact").values
    max_on_b = float(m[B.members].max()) if B.count else 0.0
    weak_bound = 3.0 * H.measure / threshold
    report = GoodSetReport(
        lam=lam,
        n_bound=float(N_bound),
        threshold=threshold,
        measure_H=H.measure,
        measure_J=J.measure,
        measure_not_G=(~G).measure,
        measure_complement_B=(~B).measure,
        tail_bound=consts.C0 * math.exp(-N_bound * consts.delta0) + 3.0 * consts.C0 * threshold,
        weak_type_bound=weak_bound,
        weak_type_ok=bool(J.measure <= weak_bound),
        max_maximal_on_B=max_on_b,
        maximal_bound_ok=bool(max_on_b <= threshold),
    )
    logger.info("good set: lam=%.3g |T\\B|=%.4g |J|=%.4g |H|=%.4g", lam, report.measure_complement_B,
                J.measure, H.measure)
    if not report.maximal_bound_ok:
        raise BoundViolationError("maximal function exceeds the threshold on B", report=report)
    return lam, B, report


def jn_distribution(f_sharp: BoundaryFn, lambda_grid: Sequence[float]) -> TailFit:
    """Fit ``log |{f# > lam}|`` against ``lam``: slope ``-delta0``, intercept ``ln C0``."""
    lams = [float(x) for x in lambda_grid]
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise ConfigurationError("lambda grid must be strictly increasing")
    if len(lams) < MIN_TAIL_POINTS:
        raise InsufficientDataError(f"lambda grid needs at least {MIN_TAIL_POINTS} levels")
    measures = [level_set(f_sharp, lam).measure for lam in lams]
    return fit_log_tail(lams, measures)


def default_level_grid(f_sharp: BoundaryFn, n_levels: int = 9) -> list:
    """Equally spaced levels in ``[0, max f#)``."""
    top = float(f_sharp.values.max())
    return [float(x) for x in np.linspace(0.0, top, n_levels + 1)[:-1]] if top > 0.0 else []


def oscillation_tails(u: BoundaryFn, lambda_grid: Optional[Sequence[float]] = None) -> OscillationReport:
    """``sup_I |{x in I : |u~ - (u~)_I| > lam}| / |I|`` over aligned dyadic arcs."""
    v = hilbert_transform(u).values
    n = u.grid.n
    devs = []
    length = n
    while length >= BMO_MIN_ARC:
        blocks = v.reshape(n // length, length)
        devs.append(np.abs(blocks - blocks.mean(axis=1, keepdims=True)))
        length //= 2
    top = max(float(d.max()) for d in devs)
    if lambda_grid is None:
        lambda_grid = np.linspace(0.0, top, 12)[1:-1] if top > 0.0 else []
    lams = [float(x) for x in lambda_grid]
    tails = [max(float((d > lam).mean(axis=1).max()) for d in devs) for lam in lams]
    fit = None
    try:
        fit = fit_log_tail(lams, tails)
    except InsufficientDataError:
        logger.warning("oscillations of the conjugate function vanish early; reporting a bounded case")
    bounded = fit is None or fit.bounded
    return OscillationReport(lambdas=lams, sup_tails=tails, fit=fit, bounded=bounded)


def bgs_ratio(F: AnalyticFn, lam: float, cfg: PathConfig, disk: DiskGrid, start: complex = 0j,
              aperture: float = 2.0, *, consts: Optional[CalibrationConstants] = None) -> BGSReport:
    """``omega{|F| > lam}`` against ``|{f# > lam}| / 2 pi``.

    With *consts* the ratio is also checked against ``consts.C_bgs``.
    """
    level = level_set(nontangential_max(F, disk, aperture), lam).normalized_measure
    F_eval = evaluator(F, cfg)
    omega = harmonic_measure(lambda z: np.abs(F_eval(z)) > lam, start, cfg)
    ratio = omega.value / level if level > 0.0 else (0.0 if omega.value == 0.0 else math.inf)
    within = None if consts is None else bool(ratio <= consts.C_bgs)
    return BGSReport(lam=float(lam), omega=omega, level_fraction=level, ratio=ratio, within_constant=within)


def calibrate_bgs(reports: Sequence[BGSReport], percentile: float = 99.0) -> float:
    """One constant for a family of BGS comparisons: the *percentile* of their finite, positive ratios.

    The percentile is taken with ``method="higher"``, so it is always one of
    the observed ratios.
    """
    ratios = np.array([r.ratio for r in reports], dtype=float)
    usable = ratios[np.isfinite(ratios) & (ratios > 0.0)]
    if usable.size < ratios.size:
        logger.warning("%d of %d BGS ratios are zero or infinite and were left out", ratios.size - usable.size, ratios.size)
    if usable.size == 0:
        raise InsufficientDataError("no finite positive BGS ratio to calibrate on")
    return float(np.percentile(usable, percentile, method="higher"))
