import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from coinwalk.metrics import shannon_entropy, spread_objective
from coinwalk.reference import THETA_2, THETA_3, symbolic_probabilities
from coinwalk.walk import (
    HALF_PI,
    CoinSequence,
    _apply_step,
    coin_batch,
    component_distributions,
    evolve,
    position_distribution,
    symmetric_initial_state,
)

angles = st.floats(0.0, HALF_PI, allow_nan=False)
phases = st.floats(0.0, 2 * np.pi, exclude_max=True, allow_nan=False)
theta_lists = st.lists(angles, min_size=1, max_size=12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(phases, angles, phases), min_size=1, max_size=40))
def test_norm_preserved_by_general_coins(steps):
    xi, th, ze = (np.array(v) for v in zip(*steps))
    psi = symmetric_initial_state(15).field
    for coin in coin_batch(xi, th, ze):
        psi = _apply_step(psi, coin)
    assert abs(np.vdot(psi, psi).real - 1.0) < 1e-12


@settings(max_examples=60, deadline=None)
@given(theta_lists)
def test_parity_mirror_and_entropy_bound(thetas):
    traj = evolve(symmetric_initial_state(2 * len(thetas) + 1), CoinSequence.from_thetas(thetas))
    for t, state in enumerate(traj):
        p = position_distribution(state)
        assert p[(state.positions + t) % 2 == 1].sum() == 0.0
        assert p[np.abs(state.positions) > t].sum() == 0.0
        pl, pr = component_distributions(state)
        assert np.max(np.abs(pl - pr[::-1])) < 1e-10
        assert shannon_entropy(p) <= np.log(t + 1) + 1e-12


@settings(max_examples=60, deadline=None)
@given(theta_lists)
def test_objective_range_and_first_angle_irrelevance(thetas):
    f = spread_objective(CoinSequence.from_thetas(thetas))
    assert -1e-12 <= f <= 1.0
    moved = spread_objective(CoinSequence.from_thetas([0.123] + thetas[1:]))
    assert abs(f - moved) < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([2, 3, 4]), angles)
def test_symbolic_probabilities_match_simulation(t, theta):
    thetas = [np.pi / 4, THETA_2, THETA_3][: t - 1] + [theta]
    p = position_distribution(evolve(symmetric_initial_state(9), CoinSequence.from_thetas(thetas))[-1])
    for x, value in symbolic_probabilities(t, theta).items():
        assert abs(p[x + 4] - value) < 1e-12
