from __future__ import annotations

import numpy as np
import pytest

from ffqaoa.models import frustrated_ring, uniform_chain
from ffqaoa.optimizer import (
    OptimizerSettings,
    Problem,
    critical_depth_scan,
    critical_depth_search,
    optimize_once,
    residual_distribution,
    restart_seed,
    revalidate,
    success_fraction,
)

SYM5 = frustrated_ring(5, 0.5, 0.5, 0.45)


def test_settings_validation():
    with pytest.raises(ValueError):
        OptimizerSettings(n_samples=0)
    with pytest.raises(ValueError):
        OptimizerSettings(init_low=1.0, init_high=1.0)
    with pytest.raises(ValueError):
        OptimizerSettings(seed=2**64)


def test_trivial_target_is_initial_state():
    rec = optimize_once(uniform_chain(3), 1, 0.0, seed=7, settings=OptimizerSettings(init_low=-1e-3, init_high=1e-3))
    assert rec.residual_energy_per_site <= 1e-12 and rec.success


def test_symmetric_n5_reaches_zero_at_predicted_depth():
    recs = residual_distribution(SYM5, 6, 1.0, OptimizerSettings(n_samples=100, seed=1), stop_on_success=True)
    assert recs[-1].success


def test_symmetric_n5_fails_below_predicted_depth():
    recs = residual_distribution(SYM5, 5, 1.0, OptimizerSettings(n_samples=100, seed=1))
    assert len(recs) == 100
    assert not any(r.success for r in recs)
    assert min(r.residual_energy_per_site for r in recs) > 1e-8


def test_variational_bound_and_revalidation():
    c = frustrated_ring(7)
    recs = residual_distribution(c, 8, 0.7, OptimizerSettings(n_samples=5, seed=4))
    for r in recs:
        assert r.residual_energy_per_site >= -1e-13
        assert abs(revalidate(r, c) - r.final_energy) <= 1e-13 * max(1.0, abs(r.final_energy))
        assert r.iterations > 0 and r.evaluations >= r.iterations


def test_restart_reproducible_from_recorded_seed():
    c = frustrated_ring(5)
    settings = OptimizerSettings(n_samples=4, seed=99)
    recs = residual_distribution(c, 4, 1.0, settings)
    for k, r in enumerate(recs):
        assert r.restart == k and r.seed == restart_seed(99, k)
        again = optimize_once(c, 4, 1.0, r.seed, settings)
        assert again.final_angles == r.final_angles
        assert again.residual_energy_per_site == r.residual_energy_per_site


def test_thread_count_does_not_change_results():
    c = frustrated_ring(7)
    settings = OptimizerSettings(n_samples=6, seed=5)
    a = residual_distribution(c, 5, 1.0, settings, threads=1)
    b = residual_distribution(c, 5, 1.0, settings, threads=3)
    assert [r.final_energy for r in a] == [r.final_energy for r in b]


def test_stop_on_success_independent_of_threads():
    settings = OptimizerSettings(n_samples=30, seed=2)
    a = residual_distribution(SYM5, 6, 1.0, settings, threads=1, stop_on_success=True)
    b = residual_distribution(SYM5, 6, 1.0, settings, threads=4, stop_on_success=True)
    assert [r.restart for r in a] == [r.restart for r in b]
    assert a[-1].success and not any(r.success for r in a[:-1])


def test_maxiter_runs_are_not_successes():
    recs = residual_distribution(SYM5, 6, 1.0, OptimizerSettings(n_samples=3, max_iterations=2))
    assert all(r.status == "maxiter" and not r.converged and not r.success for r in recs)
    assert success_fraction(recs) == 0.0


@pytest.mark.parametrize("n", [4, 6])
def test_uniform_chain_critical_depth(n):
    c = uniform_chain(n)
    assert critical_depth_search(c, 1.0, 1, n, OptimizerSettings(n_samples=50)) == n // 2


def test_critical_depth_scan_small_broken_ring():
    scan = critical_depth_scan(frustrated_ring(5), 1.0, settings=OptimizerSettings(n_samples=100), early_exit=True, window=2)
    assert scan.predicted == 10 and scan.p_critical == 10
    assert scan.successes[9] == 0 and scan.min_residual[9] > 1e-12
    assert set(scan.runs) == {8, 9, 10}


def test_problem_residual_scale():
    pr = Problem(frustrated_ring(5), 1.0)
    assert pr.residual(pr.ground_energy + 5.0) == pytest.approx(1.0)
    assert np.isfinite(pr.energy(np.zeros(4)))
