import numpy as np
import pytest

from coinwalk.spectral import (
    dispersion_constant_coin,
    effective_mass,
    gap_evolution,
    group_velocity,
    quasi_energies,
    sequence_hash,
    step_operator,
    total_operator,
)
from coinwalk.walk import HALF_PI, CoinSequence, evolve, symmetric_initial_state


def test_operator_matches_simulation():
    seq = CoinSequence.from_thetas([0.2, 0.9, 1.3, 0.5])
    n = 9
    U = total_operator(seq, n)
    psi0 = symmetric_initial_state(n)
    np.testing.assert_allclose(U @ psi0.amplitudes, evolve(psi0, seq)[-1].amplitudes, atol=1e-14)


def test_step_operator_rejects_even_lattice():
    with pytest.raises(ValueError):
        step_operator(np.eye(2), 4)


def test_non_unitary_rejected():
    with pytest.raises(ValueError):
        quasi_energies(2 * np.eye(4))


def test_dos_counts_all_states():
    rep = quasi_energies(total_operator(CoinSequence.from_thetas([0.4, 0.8]), 11), bins=16)
    assert rep.dos_counts.sum() == 22
    assert rep.quasi_energies.min() > -np.pi and rep.quasi_energies.max() <= np.pi
    assert len(rep.dos_centers) == 16


def test_flat_band_at_half_pi():
    rep = quasi_energies(total_operator(CoinSequence.from_thetas([HALF_PI]), 91))
    assert rep.gap == pytest.approx(np.pi)
    assert np.all(np.minimum(np.abs(rep.quasi_energies), np.pi - np.abs(rep.quasi_energies)) < 1e-10)


def test_zero_angle_gap_is_half_the_momentum_spacing():
    # bands eps = k and eps = pi - k: the smallest positive value is pi/N
    rep = quasi_energies(total_operator(CoinSequence.from_thetas([0.0]), 101))
    assert rep.gap == pytest.approx(np.pi / 101, abs=1e-9)


def test_global_phase_shifts_quasi_energies():
    seq = CoinSequence.from_thetas([0.3, 1.1])
    n = 7
    U = total_operator(seq, n)
    base = quasi_energies(U).quasi_energies
    # a phase e^{i phi} on every coin multiplies U(T) by e^{i T phi}
    phi = 0.37
    shifted = quasi_energies(np.exp(1j * 2 * phi) * U).quasi_energies
    expected = np.sort((base - 2 * phi + np.pi) % (2 * np.pi) - np.pi)
    np.testing.assert_allclose(np.sort(shifted), expected, atol=1e-10)
    # a sign flip on each coin cancels for an even number of steps
    flipped = np.eye(2 * n)
    for coin in seq.coins():
        flipped = step_operator(-coin, n) @ flipped
    np.testing.assert_allclose(quasi_energies(flipped).quasi_energies, base, atol=1e-12)


def test_dispersion_against_closed_form():
    for theta in (0.3, np.pi / 4, 1.2):
        d = dispersion_constant_coin(theta, 201)
        # sin eps = cos theta sin k on both bands
        np.testing.assert_allclose(np.sin(d["plus"]), np.cos(theta) * np.sin(d["k"]), atol=1e-12)
        np.testing.assert_allclose(np.sin(d["minus"]), np.cos(theta) * np.sin(d["k"]), atol=1e-12)
        total = np.mod(d["plus"] + d["minus"], 2 * np.pi)
        np.testing.assert_allclose(total, np.pi, atol=1e-12)
        k = d["k"]
        exact = np.cos(theta) * np.cos(k) / np.sqrt(1 - np.cos(theta) ** 2 * np.sin(k) ** 2)
        np.testing.assert_allclose(group_velocity(d, "plus"), exact, atol=2e-3)


def test_dispersion_matches_dense_spectrum():
    theta, n = 0.7, 31
    d = dispersion_constant_coin(theta, n)
    dense = quasi_energies(total_operator(CoinSequence.from_thetas([theta]), n)).quasi_energies
    np.testing.assert_allclose(np.sort(np.concatenate([d["plus"], d["minus"]])), dense, atol=1e-10)


def test_group_velocity_limits():
    assert np.allclose(np.abs(group_velocity(dispersion_constant_coin(0.0, 51))), 1.0)
    assert np.allclose(group_velocity(dispersion_constant_coin(HALF_PI, 51)), 0.0)


def test_effective_mass():
    assert effective_mass(np.pi / 4) == pytest.approx(np.sqrt(4 - 2 * np.sqrt(2)))
    assert effective_mass(0.0) == 0.0
    assert effective_mass(HALF_PI) == np.inf
    with pytest.raises(ValueError):
        effective_mass(2.0)


def test_gap_evolution_and_hash():
    seq = CoinSequence.from_thetas([0.2, 0.5, 0.9])
    gaps = gap_evolution(seq, 7)
    assert [t for t, _ in gaps] == [1, 2, 3]
    assert gaps[-1][1] == pytest.approx(quasi_energies(total_operator(seq, 7)).gap)
    assert sequence_hash(seq) == sequence_hash(CoinSequence.from_thetas([0.2, 0.5, 0.9]))
    assert sequence_hash(seq) != sequence_hash(CoinSequence.from_thetas([0.2, 0.5, 0.91]))
