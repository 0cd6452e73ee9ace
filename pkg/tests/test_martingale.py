"""Tests for the Brownian path engine and the estimators built on it."""

import math

import numpy as np
import pytest

from holomart.exceptions import ConfigurationError, InsufficientDataError, SimulationError
from holomart.martingale import (
    DiskTable,
    PathBatch,
    balayage,
    balayage_from_samples,
    estimate_projection,
    evaluator,
    exit_law_check,
    exit_time_check,
    harmonic_measure,
    overshoot_summary,
    path_generator,
    projection_target,
    projection_with_error,
    simulate_path,
    simulate_paths,
    tail_bound_check,
)
from holomart.models import PathConfig
from holomart.spectral import AnalyticFn, CircleGrid


Z = AnalyticFn([0.0, 1.0])


@pytest.fixture
def cfg():
    return PathConfig(dt=1e-3, r_exit=0.9, n_paths=2000, seed=7)


@pytest.fixture
def batch(cfg):
    return simulate_paths(Z, None, 0j, cfg)


# ---------------------------------------------------------------------------
# Reproducibility
# ---------------------------------------------------------------------------


def test_path_generator_streams_are_keyed_by_path():
    a = path_generator(1, 5).standard_normal(4)
    b = path_generator(1, 5).standard_normal(4)
    c = path_generator(1, 6).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_repeated_runs_are_identical(cfg, batch):
    again = simulate_paths(Z, None, 0j, cfg)
    assert np.array_equal(batch.exit_point, again.exit_point)
    assert np.array_equal(batch.n_steps, again.n_steps)


def test_worker_count_does_not_change_results(cfg, batch):
    threaded = simulate_paths(Z, None, 0j, cfg.model_copy(update={"workers": 4}))
    assert np.array_equal(batch.exit_point, threaded.exit_point)
    assert np.array_equal(batch.f_star, threaded.f_star)


def test_single_path_matches_its_batch_entry(cfg):
    batch = simulate_paths(Z, 0.5, 0j, cfg.model_copy(update={"n_paths": 600}))
    one = simulate_path(Z, 0.5, 0j, cfg, 550)
    assert one == batch.sample(550)


def test_first_index_offsets_paths(cfg, batch):
    part = simulate_paths(Z, None, 0j, cfg.model_copy(update={"n_paths": 50}), first_index=100)
    assert part.path_index[0] == 100
    assert part.sample(0) == batch.sample(100)


def test_different_seeds_differ(cfg, batch):
    other = simulate_paths(Z, None, 0j, cfg.with_seed(8))
    assert not np.array_equal(batch.exit_point, other.exit_point)


# ---------------------------------------------------------------------------
# Path outcomes
# ---------------------------------------------------------------------------


def test_exit_points_lie_on_exit_circle(batch):
    assert np.allclose(np.abs(batch.exit_point), 0.9)
    assert not batch.exhausted.any()


def test_unstopped_paths_keep_terminal_value(batch):
    assert not batch.tau_fired.any()
    assert np.array_equal(batch.stopped_value, batch.terminal_value)
    assert np.allclose(batch.terminal_value, batch.exit_point)


def test_stopping_fires_above_level(cfg):
    batch = simulate_paths(Z, 0.5, 0j, cfg)
    fired = batch.tau_fired
    assert fired.all()
    assert np.all(np.abs(batch.stopped_value[fired]) > 0.5)
    assert np.all(batch.f_star >= np.abs(batch.stopped_value))
    assert np.all(batch.f_star <= 0.9 + 1e-12)


def test_start_inside_level_set_stops_immediately(cfg):
    F = AnalyticFn([2.0])
    batch = simulate_paths(F, 1.0, 0j, cfg.model_copy(update={"n_paths": 10}))
    assert batch.tau_fired.all()
    assert np.allclose(batch.stopped_value, 2.0)
    assert np.allclose(batch.tau_point, 0.0)


def test_start_outside_exit_radius(cfg):
    with pytest.raises(ConfigurationError):
        simulate_paths(Z, None, 0.95, cfg)


def test_exhausted_paths_raise(cfg):
    short = cfg.model_copy(update={"max_steps": 10, "n_paths": 20})
    with pytest.raises(SimulationError) as excinfo:
        simulate_paths(Z, None, 0j, short)
    assert excinfo.value.exhausted_fraction == 1.0
    batch = simulate_paths(Z, None, 0j, short, strict=False)
    assert batch.exhausted_fraction == 1.0
    assert len(batch.valid()) == 0


def test_concat_of_nothing():
    with pytest.raises(InsufficientDataError):
        PathBatch.concat([])


def test_overshoot_is_small_and_nonnegative(cfg):
    summary = overshoot_summary(simulate_paths(Z, 0.5, 0j, cfg))
    assert summary.n_fired == cfg.n_paths
    assert 0.0 <= summary.mean <= summary.p99 <= summary.max < 0.3


# ---------------------------------------------------------------------------
# Evaluation along paths
# ---------------------------------------------------------------------------


def test_disk_table_matches_horner():
    F = AnalyticFn(0.5 ** np.arange(101))
    table = DiskTable(F, 0.9)
    z = np.array([0.0, 0.3 + 0.1j, -0.6j, 0.85 * np.exp(0.7j)])
    assert np.max(np.abs(table(z) - F.evaluate(z))) < 5e-3


def test_evaluator_switches_on_degree(cfg):
    assert not isinstance(evaluator(Z, cfg), DiskTable)
    assert isinstance(evaluator(AnalyticFn(np.ones(100)), cfg), DiskTable)


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------


def test_projection_recovers_finite_radius_target():
    cfg = PathConfig(dt=1e-3, r_exit=0.9, n_paths=4000, seed=11)
    grid = CircleGrid(64)
    est, se = projection_with_error(simulate_paths(Z, None, 0j, cfg), grid)
    target = projection_target(Z, grid, cfg.r_exit)
    within = np.abs(est.values - target.values) <= 4.0 * se
    assert within.mean() >= 0.95


def test_projection_of_constant_is_unbiased(cfg):
    grid = CircleGrid(32)
    samples = simulate_paths(AnalyticFn([0.7]), None, 0j, cfg)
    est, se = projection_with_error(samples, grid)
    assert np.all(np.abs(est.values - 0.7) <= 5.0 * se)
    assert np.array_equal(estimate_projection(samples, grid).values, est.values)


def test_harmonic_measure_trivial_sets(cfg):
    small = cfg.model_copy(update={"n_paths": 200})
    everything = harmonic_measure(lambda z: np.ones(np.shape(z), dtype=bool), 0j, small)
    assert everything.value == 1.0
    nothing = harmonic_measure(lambda z: np.zeros(np.shape(z), dtype=bool), 0j, small)
    assert nothing.value == 0.0
    assert "never_hit" in nothing.flags
    ring = harmonic_measure(lambda z: np.abs(z) > 0.5, 0j, small)
    assert ring.value == 1.0


def test_exit_law_is_uniform_from_origin():
    cfg = PathConfig(dt=1e-3, r_exit=0.9, n_paths=4000, seed=3)
    report = exit_law_check(simulate_paths(Z, None, 0j, cfg), (0.0, math.pi / 2))
    assert report.expected == pytest.approx(0.25, abs=1e-10)
    assert report.within_tolerance


def test_exit_law_rejects_bad_arc(batch):
    with pytest.raises(ConfigurationError):
        exit_law_check(batch, (1.0, 0.5))


def test_exit_time_matches_half_radius_squared():
    cfg = PathConfig(dt=2.5e-5, r_exit=0.9, n_paths=2000, seed=21)
    report = exit_time_check(simulate_paths(Z, None, 0j, cfg))
    assert report.expected == pytest.approx(0.405)
    assert report.std_error > 0.0
    assert abs(report.mean_exit_time - report.expected) <= 3.0 * report.std_error


def test_exit_time_from_off_center_start(cfg):
    report = exit_time_check(simulate_paths(Z, None, 0.5, cfg))
    assert report.expected == pytest.approx((0.81 - 0.25) / 2.0)


def test_balayage_needs_level_above_start_value(cfg):
    with pytest.raises(ConfigurationError):
        balayage(AnalyticFn([2.0]), 1.0, 0.0, cfg)


def test_balayage_vanishes_when_level_never_hit(batch):
    (est,) = balayage_from_samples(batch, [0.0])
    assert est.value == 0.0
    assert est.hit_fraction == 0.0


def test_tail_bound_holds_for_z(cfg):
    samples = simulate_paths(Z, 0.5, 0j, cfg)
    report = tail_bound_check(samples, Z, 0.5)
    assert report.holds
    assert report.tau_fraction == 1.0
    assert len(report.tail_lambdas) == len(report.tail_probabilities) == 10


def test_tail_bound_level_must_match_samples(cfg):
    samples = simulate_paths(Z, 0.5, 0j, cfg.model_copy(update={"n_paths": 10}))
    with pytest.raises(ConfigurationError):
        tail_bound_check(samples, Z, 0.6)


# ---------------------------------------------------------------------------
# Control variate and discretization
# ---------------------------------------------------------------------------


W = AnalyticFn([0.0, 0.6, 0.4])


def test_control_without_stopping_is_the_exact_target(batch):
    grid = CircleGrid(32)
    est, se = projection_with_error(batch, grid, control=Z)
    assert np.array_equal(est.values, projection_target(Z, grid, 0.9).values)
    assert np.all(se == 0.0)


def test_control_reduces_error_when_few_paths_fire(cfg):
    grid = CircleGrid(32)
    samples = simulate_paths(W, 0.8, 0j, cfg)
    assert 0.0 < samples.tau_fired.mean() < 0.5
    plain, plain_se = projection_with_error(samples, grid)
    controlled, control_se = projection_with_error(samples, grid, control=W)
    assert control_se.mean() < plain_se.mean()
    agree = np.abs(plain.values - controlled.values) <= 4.0 * np.hypot(plain_se, control_se)
    assert agree.mean() >= 0.95


def test_control_needs_paths_from_origin(cfg):
    samples = simulate_paths(Z, 0.5, 0.1, cfg.model_copy(update={"n_paths": 10}))
    with pytest.raises(ConfigurationError):
        projection_with_error(samples, CircleGrid(16), control=Z)


def test_stopped_projection_does_not_depend_on_exit_radius(cfg):
    # once tau has fired, the rest of the path only averages P_theta harmonically
    grid = CircleGrid(32)
    near, near_se = projection_with_error(simulate_paths(Z, 0.5, 0j, cfg), grid, control=Z)
    far_cfg = cfg.model_copy(update={"r_exit": 0.95})
    far, far_se = projection_with_error(simulate_paths(Z, 0.5, 0j, far_cfg), grid, control=Z)
    agree = np.abs(near.values - far.values) <= 4.0 * np.hypot(near_se, far_se)
    assert agree.mean() >= 0.95


def test_halving_dt_shrinks_overshoot_by_root_two(cfg):
    coarse = overshoot_summary(simulate_paths(Z, 0.5, 0j, cfg))
    fine = overshoot_summary(simulate_paths(Z, 0.5, 0j, cfg.model_copy(update={"dt": 5e-4})))
    assert coarse.n_fired == fine.n_fired == cfg.n_paths
    assert 0.6 < fine.mean / coarse.mean < 0.82


def test_balayage_of_a_circle_is_one(cfg):
    est = balayage(Z, 0.8, 1.0, cfg)
    assert est.hit_fraction == 1.0
    assert abs(est.value - 1.0) <= 4.0 * est.std_error
