"""Tests for grids, boundary functions and the Fourier-side operators."""

import numpy as np
import pytest

from holomart.exceptions import ConfigurationError, DomainError
from holomart.spectral import (
    TWO_PI,
    AnalyticFn,
    BoundaryFn,
    CircleGrid,
    GridMask,
    analytic_completion,
    bmo_norm,
    completion_trace,
    eval_interior,
    fixture,
    from_spectrum,
    hilbert_transform,
    holomorphy_defect,
    poisson_extend,
    poisson_kernel,
    riesz_project,
    series_tail_bound,
    to_spectrum,
)


@pytest.fixture
def grid():
    return CircleGrid(1024)


# ---------------------------------------------------------------------------
# Grid and containers
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("n", [4, 12, 1000, 2 ** 23, True, 8.0])
def test_invalid_grid_sizes_rejected(n):
    with pytest.raises(ConfigurationError):
        CircleGrid(n)


def test_grid_geometry(grid):
    assert grid.points[0] == 0.0
    assert np.allclose(np.diff(grid.points), TWO_PI / 1024)
    assert grid.max_degree == 511
    assert grid.measure(grid.n) == pytest.approx(TWO_PI)


def test_real_boundary_fn_rejects_imaginary_parts(grid):
    with pytest.raises(ConfigurationError):
        BoundaryFn(grid, np.full(grid.n, 1j), "real")


def test_boundary_fn_wrong_length(grid):
    with pytest.raises(ConfigurationError):
        BoundaryFn.from_real(grid, np.zeros(grid.n + 1))


def test_boundary_values_are_read_only(grid):
    u = BoundaryFn.from_real(grid, np.zeros(grid.n))
    with pytest.raises(ValueError):
        u.values[0] = 1.0


def test_boundary_arithmetic_keeps_kind(grid):
    u = BoundaryFn.from_function(grid, np.cos)
    assert u.is_real
    assert (u * 2.0).is_real
    assert not (u * 1j).is_real
    assert np.array_equal((u - u).values, np.zeros(grid.n))


def test_spectrum_roundtrip_is_identity_on_cosine(grid):
    u = BoundaryFn.from_function(grid, lambda t: np.cos(3 * t))
    s = to_spectrum(u)
    assert s.mode(3) == pytest.approx(0.5)
    assert s.mode(-3) == pytest.approx(0.5)
    assert np.allclose(from_spectrum(s, "real").values, u.values, atol=1e-13)


def test_mask_measure_and_bookkeeping(grid):
    rng = np.random.default_rng(3)
    a = GridMask(grid, rng.random(grid.n) < 0.7)
    b = GridMask(grid, rng.random(grid.n) < 0.6)
    assert a.measure == pytest.approx(TWO_PI * a.count / grid.n)
    assert (~(a & b)).count <= (~a).count + (~b).count
    assert (a - b) == (a & ~b)
    assert GridMask.full(grid).normalized_measure == 1.0
    assert GridMask.empty(grid).measure == 0.0
    assert np.array_equal(GridMask.from_indices(grid, a.indices()).members, a.members)


def test_masks_on_different_grids_do_not_combine(grid):
    with pytest.raises(ConfigurationError):
        GridMask.full(grid) & GridMask.full(CircleGrid(8))


# ---------------------------------------------------------------------------
# Conjugate function and completion
# ---------------------------------------------------------------------------


def test_hilbert_maps_cosines_to_sines():
    grid = CircleGrid(4096)
    theta = grid.points
    for k in (1, 2, 17, 512, 1024):
        u = BoundaryFn.from_real(grid, np.cos(k * theta))
        assert np.max(np.abs(hilbert_transform(u).values - np.sin(k * theta))) <= 1e-10


def test_hilbert_of_constant_is_zero(grid):
    assert np.allclose(hilbert_transform(BoundaryFn.from_real(grid, 5.0)).values, 0.0, atol=1e-12)


def test_hilbert_drops_nyquist_mode():
    grid = CircleGrid(16)
    u = BoundaryFn.from_real(grid, np.cos(8 * grid.points))
    assert np.allclose(hilbert_transform(u).values, 0.0, atol=1e-14)


def test_hilbert_squared_is_minus_identity_on_mean_free_part(grid):
    u = BoundaryFn.from_function(grid, lambda t: np.exp(np.cos(t)) + 0.3 * np.sin(5 * t))
    twice = hilbert_transform(hilbert_transform(u)).values
    assert np.max(np.abs(twice + (u.values - u.values.mean()))) <= 1e-12


def test_hilbert_rejects_complex_input(grid):
    with pytest.raises(ConfigurationError):
        hilbert_transform(BoundaryFn.from_complex(grid, 1j))


def test_completion_of_cosine_is_z(grid):
    u = BoundaryFn.from_function(grid, np.cos)
    F = analytic_completion(u)
    assert F.degree == grid.max_degree
    expected = np.zeros(F.coeffs.size, dtype=complex)
    expected[1] = 1.0
    assert np.allclose(F.coeffs, expected, atol=1e-14)


def test_completion_of_centered_double_cosine():
    grid = CircleGrid(64)
    u = BoundaryFn.from_function(grid, lambda t: np.cos(2 * t) - 0.5)
    expected = np.zeros(grid.max_degree + 1, dtype=complex)
    expected[0] = -0.5
    expected[2] = 1.0
    assert np.allclose(analytic_completion(u).coeffs, expected, atol=1e-14)


def test_square_completion_inside_matches_poisson_extension(grid):
    u = fixture(grid, "square")
    value = eval_interior(analytic_completion(u), 0.9)
    assert value.real == pytest.approx(poisson_extend(u, 0.9), abs=1e-6)
    assert value.imag == pytest.approx(poisson_extend(hilbert_transform(u), 0.9), abs=1e-6)


def test_completion_trace_keeps_real_part_exact(grid):
    u = fixture(grid, "square")
    tr = completion_trace(u)
    assert np.array_equal(tr.values.real, u.values)
    assert np.allclose(analytic_completion(u).trace(grid).values, tr.values, atol=1e-12)


def test_completion_mean_is_mean_of_u(grid):
    u = BoundaryFn.from_function(grid, lambda t: 0.3 + np.sin(t))
    assert analytic_completion(u).coeffs[0] == pytest.approx(0.3)


# ---------------------------------------------------------------------------
# Riesz projection and holomorphy
# ---------------------------------------------------------------------------


def test_riesz_projection_is_identity_on_analytic_traces(grid):
    rng = np.random.default_rng(0)
    F = AnalyticFn(rng.normal(size=40) + 1j * rng.normal(size=40))
    G = riesz_project(F.trace(grid))
    assert np.allclose(G.coeffs[:40], F.coeffs, atol=1e-12)
    assert np.allclose(G.coeffs[40:], 0.0, atol=1e-12)


def test_riesz_projection_kills_negative_frequencies(grid):
    h = BoundaryFn.from_complex(grid, np.exp(-1j * grid.points))
    assert np.allclose(riesz_project(h).coeffs, 0.0, atol=1e-14)


def test_riesz_projection_is_idempotent(grid):
    rng = np.random.default_rng(1)
    h = BoundaryFn.from_complex(grid, rng.normal(size=grid.n) + 1j * rng.normal(size=grid.n))
    once = riesz_project(h)
    twice = riesz_project(once.trace(grid))
    assert np.allclose(once.coeffs, twice.coeffs, atol=1e-12)


def test_holomorphy_defect_zero_below_half_grid(grid):
    F = AnalyticFn.monomial(grid.n // 2 - 1)
    assert holomorphy_defect(F, grid) < 1e-12


def test_holomorphy_defect_catches_aliased_coefficients(grid):
    F = AnalyticFn.monomial(grid.n - 1)
    assert holomorphy_defect(F, grid) == pytest.approx(1.0)


def test_trace_folds_high_degrees_onto_aliases():
    grid = CircleGrid(8)
    assert np.allclose(AnalyticFn.monomial(9).trace(grid).values, np.exp(1j * grid.points))


def test_analytic_arithmetic_pads_coefficients():
    F = AnalyticFn([1.0, 2.0]) + AnalyticFn.monomial(3, 1j)
    assert F.degree == 3
    assert np.allclose((F * 2.0 / 4.0).coeffs, [0.5, 1.0, 0.0, 0.5j])


# ---------------------------------------------------------------------------
# Disk evaluation and Poisson kernel
# ---------------------------------------------------------------------------


def test_eval_interior_checks_radius():
    F = AnalyticFn([0.0, 1.0])
    assert eval_interior(F, 0.5 + 0.5j) == pytest.approx(0.5 + 0.5j)
    with pytest.raises(DomainError):
        eval_interior(F, 0.9999999, r_max=0.99)


def test_poisson_kernel_integrates_to_one(grid):
    assert np.mean(poisson_kernel(grid.points, 0.5 + 0.2j)) == pytest.approx(1.0, abs=1e-12)


def test_poisson_kernel_values():
    assert poisson_kernel(0.0, 0.5) == pytest.approx(3.0)
    assert poisson_kernel(np.pi, 0.5) == pytest.approx(1.0 / 3.0)


def test_poisson_kernel_outside_disk():
    with pytest.raises(DomainError):
        poisson_kernel(0.0, 1.0)


def test_poisson_extend_reproduces_harmonic_functions(grid):
    u = BoundaryFn.from_function(grid, np.cos)
    z = np.array([0.0, 0.3 - 0.4j, -0.7j])
    out = poisson_extend(u, z)
    assert np.isrealobj(out)
    assert np.allclose(out, z.real, atol=1e-12)


def test_series_tail_bound_radius_checked():
    F = AnalyticFn([1.0, 0.5, 0.25])
    assert series_tail_bound(F, 0.5) == pytest.approx(1.0 * 0.5 ** 3 / 0.5)
    with pytest.raises(DomainError):
        series_tail_bound(F, 1.0)


def test_truncated_series_error_within_tail_bound():
    grid = CircleGrid(256)
    F = AnalyticFn(0.9 ** np.arange(201))
    for r in (0.5, 0.9, 0.97):
        z = r * np.exp(1j * grid.points)
        exact = 1.0 / (1.0 - 0.9 * z)
        err = np.max(np.abs(F.on_circle(grid, r).values - exact))
        assert err <= series_tail_bound(F, r) + 1e-12


def test_maximum_principle_on_inner_circles():
    grid = CircleGrid(256)
    F = AnalyticFn(0.9 ** np.arange(101))
    sups = [F.on_circle(grid, r).sup_norm() for r in (0.0, 0.3, 0.6, 0.9, 1.0)]
    assert all(a <= b + 1e-12 for a, b in zip(sups, sups[1:]))
    assert sups[-1] == pytest.approx(F.sup_norm(grid))


# ---------------------------------------------------------------------------
# BMO and fixtures
# ---------------------------------------------------------------------------


def test_bmo_norm_of_constant_is_zero(grid):
    assert bmo_norm(BoundaryFn.from_real(grid, 2.5)) == 0.0


def test_bmo_norm_square_wave(grid):
    # the full circle already has mean oscillation 1
    assert bmo_norm(fixture(grid, "square")) == pytest.approx(1.0, abs=1e-2)


@pytest.mark.parametrize("kind", ["square", "cosine", "log"])
def test_bmo_norm_at_most_twice_sup(grid, kind):
    u = fixture(grid, kind)
    assert bmo_norm(u) <= 2.0 * u.sup_norm()


def test_bmo_norm_of_log_is_stable_under_refinement():
    coarse = bmo_norm(fixture(CircleGrid(1024), "log"))
    fine = bmo_norm(fixture(CircleGrid(2048), "log"))
    assert coarse > 0.0
    assert abs(fine - coarse) <= 0.1 * coarse


def test_square_fixture_zeros():
    grid = CircleGrid(64)
    u = fixture(grid, "square")
    assert u.values[0] == 0.0
    assert u.values[32] == 0.0
    assert set(np.unique(u.values)) == {-1.0, 0.0, 1.0}


def test_log_fixture_is_finite():
    grid = CircleGrid(64)
    u = fixture(grid, "log")
    assert np.all(np.isfinite(u.values))
    assert u.values[0] == u.values[1]


def test_unknown_fixture(grid):
    with pytest.raises(ConfigurationError):
        fixture(grid, "triangle")
