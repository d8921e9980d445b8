import json

import numpy as np
import pytest

from coinwalk.metrics import final_step_objective, spread_objective
from coinwalk.optimize import (
    FIRST_THETA,
    OptimizationRun,
    SearchSettings,
    minimize_final_step,
    minimize_global,
    minimize_stepwise,
    numerical_gradient,
    prefix_objectives,
    restart_generator,
    robustness_scan,
)
from coinwalk.reference import THETA_2, THETA_3
from coinwalk.walk import HALF_PI


def test_restart_streams_are_independent_and_stable():
    a = restart_generator(5, 0).random(4)
    np.testing.assert_array_equal(a, restart_generator(5, 0).random(4))
    assert not np.allclose(a, restart_generator(5, 1).random(4))
    assert not np.allclose(a, restart_generator(6, 0).random(4))


def test_numerical_gradient_quadratic_and_bounds():
    f = lambda x: float(np.sum((x - 0.3) ** 2))
    g = numerical_gradient(f, [0.0, 1.0], lower=[0.0, 0.0], upper=[1.0, 1.0])
    np.testing.assert_allclose(g, [-0.6, 1.4], atol=1e-5)
    vec = numerical_gradient(lambda X: np.sum((X - 0.3) ** 2, axis=1), [0.5, 0.5], vectorized=True)
    np.testing.assert_allclose(vec, [0.4, 0.4], atol=1e-8)


def test_settings_reject_unknown_method():
    with pytest.raises(ValueError):
        SearchSettings(method="newton")


@pytest.mark.parametrize("method", ["gd", "cg", "lbfgsb"])
def test_all_local_searches_solve_three_steps(method):
    run = minimize_global(3, restarts=8, seed=1, settings=SearchSettings(method=method, max_iter=2000))
    assert run.best_value < 1e-6
    np.testing.assert_allclose(run.best_sequence.thetas[1:], [THETA_2, THETA_3], atol=1e-3)


def test_global_run_structure():
    run = minimize_global(6, restarts=6, seed=3)
    assert run.best_sequence.thetas[0] == FIRST_THETA
    assert len(run.ledger) == 6
    values = [e.value for e in run.ledger]
    assert values == sorted(values) and values[0] == run.best_value
    assert run.ledger[0].distance == 0.0
    assert run.best_value == pytest.approx(spread_objective(run.best_sequence), abs=1e-14)
    assert run.trace[-1] == pytest.approx(run.best_value, abs=1e-14)
    np.testing.assert_allclose(run.trace, prefix_objectives(run.best_sequence))
    assert np.all(run.best_sequence.thetas >= 0) and np.all(run.best_sequence.thetas <= HALF_PI)


def test_global_run_is_deterministic_and_thread_independent():
    a = minimize_global(5, restarts=4, seed=9)
    b = minimize_global(5, restarts=4, seed=9, threads=2)
    assert json.dumps(a.to_dict(False)) == json.dumps(b.to_dict(False))


def test_more_restarts_never_worse():
    few = minimize_global(7, restarts=3, seed=4)
    many = minimize_global(7, restarts=12, seed=4)
    assert many.best_value <= few.best_value + 1e-15


def test_warm_start_and_heuristic_start():
    base = minimize_global(6, restarts=4, seed=2)
    warm = minimize_global(6, "full_su2", restarts=2, seed=2, warm_start=base.best_sequence)
    assert warm.best_value <= base.best_value + 1e-12
    assert any(e.restart == -1 for e in warm.ledger)
    heur = minimize_global(6, restarts=2, seed=2, heuristic_start=True)
    assert heur.settings["heuristic_start"] is True


def test_run_round_trip():
    run = minimize_global(4, restarts=2, seed=0)
    back = OptimizationRun.from_dict(json.loads(json.dumps(run.to_dict())))
    np.testing.assert_array_equal(back.best_sequence.thetas, run.best_sequence.thetas)
    assert back.best_value == run.best_value
    assert "wall_time" not in run.to_dict(include_timing=False)


def test_stepwise_greedy():
    run = minimize_stepwise(6)
    assert run.mode == "stepwise"
    assert run.trace[2] == pytest.approx(0.0, abs=1e-10)
    np.testing.assert_allclose(run.best_sequence.thetas[1:3], [THETA_2, THETA_3], atol=1e-6)
    assert run.best_value == pytest.approx(spread_objective(run.best_sequence), abs=1e-12)
    glob = minimize_global(6, restarts=10, seed=1)
    assert glob.best_value <= run.best_value + 1e-12


def test_final_step_objective_is_easier():
    run = minimize_final_step(5, restarts=6, seed=1)
    assert run.best_value < 1e-3
    assert run.best_value == pytest.approx(final_step_objective(run.best_sequence), abs=1e-14)


def test_validation():
    with pytest.raises(ValueError):
        minimize_global(3, restarts=0)
    with pytest.raises(ValueError):
        minimize_stepwise(0)


def test_robustness_scan_shape_and_reproducibility():
    seq = minimize_global(5, restarts=4, seed=1).best_sequence
    a = robustness_scan(seq, [0.0, 0.1, 0.3], samples=64, seed=7)
    b = robustness_scan(seq, [0.0, 0.1, 0.3], samples=64, seed=7)
    assert a.mean_ratios[0] == 1.0
    np.testing.assert_array_equal(a.mean_ratios, b.mean_ratios)
    assert a.mean_ratios[2] > a.mean_ratios[1] > 1.0
    # a stream depends only on its amplitude index
    c = robustness_scan(seq, [0.0, 0.1], samples=64, seed=7)
    np.testing.assert_array_equal(c.ratios[1], a.ratios[1])
    assert set(a.to_dict()) >= {"mean_ratios", "std_ratios", "noise_amplitudes"}
    with pytest.raises(ValueError):
        robustness_scan(seq, [0.1], samples=0)
