"""Fourier-side machinery on the unit circle.

Grids, boundary functions, one-sided Fourier expansions (the only
representation used for bounded analytic functions), conjugate functions,
Riesz projection, the Poisson kernel and a dyadic BMO estimator.

Conventions
-----------
* A grid of size ``n`` samples ``theta_j = 2 pi j / n``; one cell has measure
  ``2 pi / n``.
* ``fft(values) / n`` are the Fourier coefficients ``u_hat(k)``.
* The Nyquist mode ``k = -n/2`` has no sign and is dropped by every
  operator that applies a sign multiplier or keeps one half of the spectrum.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from numpy.polynomial import polynomial as P

from .exceptions import ConfigurationError, DomainError
from .models import is_grid_size

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
R_MAX_DEFAULT = 1.0 - 2.0 ** -10
BMO_MIN_ARC = 8

ArrayLike = Union[float, complex, np.ndarray]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CircleGrid:
    """Uniform grid of ``n`` points on the circle (n a power of two, n >= 8)."""

    n: int

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or not is_grid_size(int(self.n)):
            raise ConfigurationError(f"grid size must be a power of two in [8, 2**22], got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def cell(self) -> float:
        return TWO_PI / self.n

    @property
    def points(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n) / self.n

    @property
    def max_degree(self) -> int:
        """Default truncation degree of analytic functions on this grid."""
        return self.n // 2 - 1

    def point(self, j: int) -> float:
        return TWO_PI * j / self.n

    def measure(self, count: int) -> float:
        return self.cell * count


def make_grid(n: int) -> CircleGrid:
    return CircleGrid(n)


@dataclass(frozen=True, eq=False)
class BoundaryFn:
    """Samples of a function on a :class:`CircleGrid`.

    ``kind == "real"`` stores float samples; ``"complex"`` stores complex ones.
    """

    grid: CircleGrid
    values: np.ndarray = field(repr=False)
    kind: str = "complex"

    def __post_init__(self) -> None:
        vals = np.asarray(self.values)
        if vals.ndim != 1 or vals.shape[0] != self.grid.n:
            raise ConfigurationError(
                f"expected {self.grid.n} samples, got shape {vals.shape}"
            )
        if self.kind == "real":
            if np.iscomplexobj(vals):
                if np.any(vals.imag != 0.0):
                    raise ConfigurationError("a real BoundaryFn must have zero imaginary parts")
                vals = vals.real
            vals = vals.astype(float)
        elif self.kind == "complex":
            vals = vals.astype(complex)
        else:
            raise ConfigurationError(f"unknown kind {self.kind!r}")
        object.__setattr__(self, "values", _frozen(vals))

    @classmethod
    def from_real(cls, grid: CircleGrid, values: ArrayLike) -> "BoundaryFn":
        return cls(grid, np.broadcast_to(np.asarray(values, dtype=float), (grid.n,)), "real")

    @classmethod
    def from_complex(cls, grid: CircleGrid, values: ArrayLike) -> "BoundaryFn":
        return cls(grid, np.broadcast_to(np.asarray(values, dtype=complex), (grid.n,)), "complex")

    @classmethod
    def from_function(
        cls, grid: CircleGrid, fn: Callable[[np.ndarray], np.ndarray], kind: Optional[str] = None
    ) -> "BoundaryFn":
        vals = np.asarray(fn(grid.points))
        if kind is None:
            kind = "complex" if np.iscomplexobj(vals) else "real"
        return cls(grid, np.broadcast_to(vals, (grid.n,)), kind)

    @property
    def is_real(self) -> bool:
        return self.kind == "real"

    def real_part(self) -> "BoundaryFn":
        return BoundaryFn(self.grid, np.real(self.values), "real")

    def imag_part(self) -> "BoundaryFn":
        return BoundaryFn(self.grid, np.imag(self.values), "real")

    def abs(self) -> "BoundaryFn":
        return BoundaryFn(self.grid, np.abs(self.values), "real")

    def mean(self) -> complex:
        return np.mean(self.values)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def _combine(self, other: Union["BoundaryFn", float, complex], op: Callable) -> "BoundaryFn":
        if isinstance(other, BoundaryFn):
            if other.grid != self.grid:
                raise ConfigurationError("boundary functions live on different grids")
            vals = op(self.values, other.values)
            kind = "real" if self.is_real and other.is_real else "complex"
        else:
            vals = op(self.values, other)
            kind = "real" if self.is_real and np.isrealobj(other) else "complex"
        return BoundaryFn(self.grid, vals, kind)

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, other):
        return self._combine(other, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._combine(other, np.true_divide)

    def __neg__(self) -> "BoundaryFn":
        return BoundaryFn(self.grid, -self.values, self.kind)


@dataclass(frozen=True, eq=False)
class AnalyticFn:
    """Finite one-sided Fourier expansion ``sum_{k=0..M} c_k z^k``.

    Only nonnegative frequencies can be stored, which is what certifies the
    function as holomorphic in the disk.
    """

    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        if c.ndim != 1 or c.size == 0:
            raise ConfigurationError("an AnalyticFn needs a nonempty 1-D coefficient vector")
        object.__setattr__(self, "coeffs", _frozen(c))

    @classmethod
    def constant(cls, c: complex) -> "AnalyticFn":
        return cls(np.array([c], dtype=complex))

    @classmethod
    def monomial(cls, k: int, c: complex = 1.0) -> "AnalyticFn":
        coeffs = np.zeros(k + 1, dtype=complex)
        coeffs[k] = c
        return cls(coeffs)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def evaluate(self, z: ArrayLike) -> ArrayLike:
        """Horner evaluation without a domain check."""
        return P.polyval(z, self.coeffs)

    def _on_grid(self, grid: CircleGrid, coeffs: np.ndarray) -> BoundaryFn:
        padded = np.zeros(grid.n, dtype=complex)
        # degrees >= n fold onto their alias on the grid
        np.add.at(padded, np.arange(coeffs.size) % grid.n, coeffs)
        return BoundaryFn(grid, grid.n * np.fft.ifft(padded), "complex")

    def trace(self, grid: CircleGrid) -> BoundaryFn:
        """Boundary values ``F(e^{i theta_j})``."""
        return self._on_grid(grid, self.coeffs)

    def on_circle(self, grid: CircleGrid, r: float) -> BoundaryFn:
        """Values ``F(r e^{i theta_j})`` for ``0 <= r <= 1``."""
        return self._on_grid(grid, self.coeffs * r ** np.arange(self.coeffs.size))

    def sup_norm(self, grid: CircleGrid) -> float:
        """Sup over the closed disk, read off the trace (maximum principle)."""
        return self.trace(grid).sup_norm()

    def _padded(self, other: "AnalyticFn"):
        m = max(self.coeffs.size, other.coeffs.size)
        a = np.zeros(m, dtype=complex)
        b = np.zeros(m, dtype=complex)
        a[: self.coeffs.size] = self.coeffs
        b[: other.coeffs.size] = other.coeffs
        return a, b

    def __add__(self, other: "AnalyticFn") -> "AnalyticFn":
        a, b = self._padded(other)
        return AnalyticFn(a + b)

    def __sub__(self, other: "AnalyticFn") -> "AnalyticFn":
        a, b = self._padded(other)
        return AnalyticFn(a - b)

    def __mul__(self, scalar: complex) -> "AnalyticFn":
        return AnalyticFn(self.coeffs * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar: complex) -> "AnalyticFn":
        return AnalyticFn(self.coeffs / scalar)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Fourier coefficients indexed ``-n/2 .. n/2 - 1``."""

    grid: CircleGrid
    coeffs: np.ndarray = field(repr=False)

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(-self.grid.n // 2, self.grid.n // 2)

    def mode(self, k: int) -> complex:
        return complex(self.coeffs[k + self.grid.n // 2])


def to_spectrum(u: BoundaryFn) -> Spectrum:
    return Spectrum(u.grid, _frozen(np.fft.fftshift(np.fft.fft(u.values) / u.grid.n)))


def from_spectrum(s: Spectrum, kind: str = "complex") -> BoundaryFn:
    vals = s.grid.n * np.fft.ifft(np.fft.ifftshift(s.coeffs))
    if kind == "real":
        vals = vals.real
    return BoundaryFn(s.grid, vals, kind)


@dataclass(frozen=True, eq=False)
class GridMask:
    """Subset of grid points; each member carries one cell of measure ``2 pi / n``."""

    grid: CircleGrid
    members: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        m = np.asarray(self.members, dtype=bool)
        if m.shape != (self.grid.n,):
            raise ConfigurationError(f"mask must have {self.grid.n} entries, got shape {m.shape}")
        object.__setattr__(self, "members", _frozen(m))

    @classmethod
    def full(cls, grid: CircleGrid) -> "GridMask":
        return cls(grid, np.ones(grid.n, dtype=bool))

    @classmethod
    def empty(cls, grid: CircleGrid) -> "GridMask":
        return cls(grid, np.zeros(grid.n, dtype=bool))

    @classmethod
    def from_indices(cls, grid: CircleGrid, indices) -> "GridMask":
        m = np.zeros(grid.n, dtype=bool)
        m[np.asarray(indices, dtype=int)] = True
        return cls(grid, m)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.members))

    @property
    def measure(self) -> float:
        return self.grid.measure(self.count)

    @property
    def normalized_measure(self) -> float:
        return self.count / self.grid.n

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.members)

    def _check(self, other: "GridMask") -> None:
        if other.grid != self.grid:
            raise ConfigurationError("masks live on different grids")

    def __and__(self, other: "GridMask") -> "GridMask":
        self._check(other)
        return GridMask(self.grid, self.members & other.members)

    def __or__(self, other: "GridMask") -> "GridMask":
        self._check(other)
        return GridMask(self.grid, self.members | other.members)

    def __sub__(self, other: "GridMask") -> "GridMask":
        self._check(other)
        return GridMask(self.grid, self.members & ~other.members)

    def __invert__(self) -> "GridMask":
        return GridMask(self.grid, ~self.members)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GridMask):
            return NotImplemented
        return self.grid == other.grid and bool(np.array_equal(self.members, other.members))

    __hash__ = None  # type: ignore[assignment]


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------


def _require_real(u: BoundaryFn, what: str) -> None:
    if not u.is_real:
        raise ConfigurationError(f"{what} needs a real-valued boundary function")


def _integer_frequencies(n: int) -> np.ndarray:
    return np.fft.fftfreq(n, d=1.0 / n)


def hilbert_transform(u: BoundaryFn) -> BoundaryFn:
    """Conjugate function: multiplier ``-i sign(k)``, mean and Nyquist modes to zero."""
    _require_real(u, "hilbert_transform")
    n = u.grid.n
    mult = -1j * np.sign(_integer_frequencies(n))
    mult[n // 2] = 0.0
    vals = np.fft.ifft(np.fft.fft(u.values) * mult).real
    return BoundaryFn(u.grid, vals, "real")


def completion_trace(u: BoundaryFn) -> BoundaryFn:
    """Boundary values ``u + i u~`` with the real part kept bit-exact."""
    return BoundaryFn(u.grid, u.values + 1j * hilbert_transform(u).values, "complex")


def analytic_completion(u: BoundaryFn) -> AnalyticFn:
    """``F`` with boundary values ``u + i u~``: ``c_0 = mean(u)``, ``c_k = 2 u_hat(k)``."""
    _require_real(u, "analytic_completion")
    n = u.grid.n
    m = u.grid.max_degree
    uhat = np.fft.fft(u.values) / n
    coeffs = np.empty(m + 1, dtype=complex)
    coeffs[0] = uhat[0].real
    coeffs[1:] = 2.0 * uhat[1 : m + 1]
    return AnalyticFn(coeffs)


def riesz_project(h: BoundaryFn) -> AnalyticFn:
    """Keep the modes ``0 <= k < n/2`` of *h*; idempotent, identity on analytic traces."""
    n = h.grid.n
    return AnalyticFn((np.fft.fft(h.values) / n)[: n // 2])


def holomorphy_defect(F: AnalyticFn, grid: CircleGrid) -> float:
    """Largest negative-frequency mode of the trace of *F* on *grid*.

    Zero (to rounding) when ``degree < n/2``; coefficients of higher degree
    alias onto negative modes and show up here.
    """
    modes = np.fft.fft(F.trace(grid).values) / grid.n
    negative = modes[grid.n // 2 :]
    return float(np.max(np.abs(negative)))


def series_tail_bound(F: AnalyticFn, r: float) -> float:
    """``max|c_k| r^{M+1} / (1 - r)``: what a longer expansion could add at radius r."""
    if not 0.0 <= r < 1.0:
        raise DomainError(f"radius must lie in [0, 1), got {r}")
    return float(np.max(np.abs(F.coeffs)) * r ** (F.degree + 1) / (1.0 - r))


def _check_radius(z: ArrayLike, r_max: float) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) > r_max):
        raise DomainError(f"|z| exceeds r_max={r_max}")
    return z


def eval_interior(F: AnalyticFn, z: ArrayLike, r_max: float = R_MAX_DEFAULT) -> ArrayLike:
    """Evaluate ``sum c_k z^k`` by Horner's rule for ``|z| <= r_max``."""
    zz = _check_radius(z, r_max)
    out = F.evaluate(zz)
    return complex(out) if zz.ndim == 0 else out


def poisson_kernel(theta: ArrayLike, z: ArrayLike) -> ArrayLike:
    """``P_theta(z) = (1 - |z|^2) / |e^{i theta} - z|^2`` for ``|z| < 1``."""
    zz = np.asarray(z, dtype=complex)
    if np.any(np.abs(zz) >= 1.0):
        raise DomainError("the Poisson kernel is defined for |z| < 1")
    out = (1.0 - np.abs(zz) ** 2) / np.abs(np.exp(1j * np.asarray(theta, dtype=float)) - zz) ** 2
    return float(out) if np.ndim(out) == 0 else out


def poisson_extend(u: BoundaryFn, z: ArrayLike, r_max: float = R_MAX_DEFAULT) -> ArrayLike:
    """Harmonic extension by grid quadrature of the Poisson kernel."""
    zz = _check_radius(z, r_max)
    flat = np.atleast_1d(zz).ravel()
    theta = u.grid.points
    out = np.empty(flat.shape, dtype=complex)
    for i, zi in enumerate(flat):
        out[i] = np.mean(u.values * poisson_kernel(theta, zi))
    if u.is_real:
        out = out.real
    if zz.ndim == 0:
        return out[0].item()
    return out.reshape(zz.shape)


def bmo_norm(u: BoundaryFn) -> float:
    """Max mean oscillation over aligned dyadic arcs of length n, n/2, ..., 8 cells."""
    vals = u.values
    if np.all(vals == vals[0]):
        return 0.0
    n = u.grid.n
    best = 0.0
    length = n
    while length >= BMO_MIN_ARC:
        blocks = vals.reshape(n // length, length)
        means = blocks.mean(axis=1, keepdims=True)
        osc = np.abs(blocks - means).mean(axis=1)
        best = max(best, float(osc.max()))
        length //= 2
    return best


# ---------------------------------------------------------------------------
# Test inputs
# ---------------------------------------------------------------------------


def fixture(grid: CircleGrid, kind: str) -> BoundaryFn:
    """Real test inputs: ``square`` (sign sin), ``cosine`` or ``log`` (ln|2 sin(theta/2)|)."""
    theta = grid.points
    if kind == "square":
        vals = np.sign(np.sin(theta))
        vals[0] = 0.0
        vals[grid.n // 2] = 0.0
    elif kind == "cosine":
        vals = np.cos(theta)
    elif kind == "log":
        with np.errstate(divide="ignore"):
            vals = np.log(np.abs(2.0 * np.sin(theta / 2.0)))
        vals[0] = vals[1]
    else:
        raise ConfigurationError(f"unknown fixture {kind!r}")
    return BoundaryFn(grid, vals, "real")
