"""
Diagnostics of walker states and trajectories.

All logarithms are natural, so entropies are in nats. Scalar functions take
single states or distributions; the ``*_batch`` helpers work on stacked
distributions and back the optimizer's objective evaluations.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .walk import (
    CoinSequence,
    WalkerState,
    batch_distributions,
    component_distributions,
    evolve,
    position_distribution,
    symmetric_initial_state,
)

__all__ = [
    "TrajectoryReport",
    "StepRecord",
    "shannon_entropy",
    "entropy_batch",
    "max_entropy",
    "spread_objective",
    "spread_objective_from_entropies",
    "spread_objective_batch",
    "final_step_objective",
    "final_step_objective_batch",
    "variance",
    "uniform_variance",
    "entanglement_entropy",
    "position_entanglement_entropy",
    "amplitude_overlap",
    "averaged_amplitude_overlap",
    "probability_overlap",
    "averaged_probability_overlap",
    "survival",
    "cesaro_average",
    "uniform_references",
    "uniform_state",
    "sequence_distance",
    "trajectory_report",
    "simulate_report",
]


def shannon_entropy(p: Sequence[float]) -> float:
    """-sum p log p in nats, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError("probabilities must be non-negative")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def entropy_batch(p: NDArray[np.float64]) -> NDArray[np.float64]:
    """Shannon entropy along the last axis, no validation."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    return -terms.sum(axis=-1)


def max_entropy(t: int) -> float:
    """log(t + 1): at most t + 1 sites are reachable after t steps."""
    return float(np.log(t + 1))


def _log_norms(T: int) -> NDArray[np.float64]:
    return np.log(np.arange(2, T + 2, dtype=float))


def spread_objective_from_entropies(entropies: NDArray[np.float64]) -> NDArray[np.float64]:
    """
    F from entropies S(1..T) stacked on the last axis.

    The t = 0 term is omitted (it is 0/0); F averages t = 1..T.
    """
    entropies = np.asarray(entropies, dtype=float)
    T = entropies.shape[-1]
    return 1.0 - np.mean(entropies / _log_norms(T), axis=-1)


def spread_objective_batch(coins: NDArray[np.complex128], n_sites: int | None = None) -> NDArray[np.float64]:
    """F for a (B, T, 2, 2) stack of coin sequences."""
    probs = batch_distributions(coins, n_sites)
    return spread_objective_from_entropies(entropy_batch(probs[:, 1:]))


def final_step_objective_batch(coins: NDArray[np.complex128], n_sites: int | None = None) -> NDArray[np.float64]:
    """F' for a (B, T, 2, 2) stack of coin sequences."""
    probs = batch_distributions(coins, n_sites)
    T = probs.shape[1] - 1
    return 1.0 - entropy_batch(probs[:, -1]) / np.log(T + 1)


def spread_objective(seq: CoinSequence, n_sites: int | None = None) -> float:
    """
    Whole-history spread deficit F = 1 - (1/T) sum_t S(t) / log(t + 1).

    Zero when the walker is uniform over its reachable sites at every step,
    one when it stays localized.
    """
    return float(spread_objective_batch(seq.coins()[None], n_sites)[0])


def final_step_objective(seq: CoinSequence, n_sites: int | None = None) -> float:
    """F' = 1 - S(T) / log(T + 1), ignoring intermediate steps."""
    return float(final_step_objective_batch(seq.coins()[None], n_sites)[0])


def variance(p: Sequence[float], positions: Sequence[float] | None = None) -> float:
    """<x^2> - <x>^2 in physical site coordinates (origin at the centre)."""
    p = np.asarray(p, dtype=float)
    if positions is None:
        positions = np.arange(p.size) - (p.size - 1) / 2
    x = np.asarray(positions, dtype=float)
    mean = np.dot(p, x)
    return float(np.dot(p, x * x) - mean * mean)


def uniform_variance(T: int) -> float:
    """Variance of a walker spread evenly over the T + 1 sites of equal parity."""
    if T < 1:
        raise ValueError("T must be >= 1")
    return T * (T * T + 3 * T + 2) / (3.0 * (T + 1))


def _reduced_coin_matrix(state: WalkerState) -> NDArray[np.complex128]:
    psi = state.field
    return psi.T @ psi.conj()


def _von_neumann(eigs: NDArray[np.float64]) -> float:
    eigs = eigs[eigs > 1e-15]
    return float(-np.sum(eigs * np.log(eigs)))


def entanglement_entropy(state: WalkerState) -> float:
    """Von Neumann entropy of the 2x2 reduced coin density matrix."""
    return _von_neumann(np.linalg.eigvalsh(_reduced_coin_matrix(state)))


def position_entanglement_entropy(state: WalkerState) -> float:
    """Same quantity from the position side, via Schmidt coefficients."""
    sv = np.linalg.svd(state.field, compute_uv=False)
    return _von_neumann(sv**2)


def amplitude_overlap(state: WalkerState) -> float:
    """|<psi_R|psi_L>|^2 of the unnormalized coin components."""
    psi = state.field
    return float(abs(np.vdot(psi[:, 0], psi[:, 1])) ** 2)


def averaged_amplitude_overlap(trajectory: Sequence[WalkerState]) -> float:
    """Mean of the amplitude overlap over t = 1..T (the initial state is skipped)."""
    if len(trajectory) < 2:
        raise ValueError("trajectory needs at least one step")
    return float(np.mean([amplitude_overlap(s) for s in trajectory[1:]]))


def probability_overlap(state: WalkerState) -> float:
    """
    sum_x min(P_L(x), P_R(x)) of the raw component distributions.

    Raw means each component keeps its own weight, so two coincident halves
    of mass 1/2 each give 1/2.
    """
    pl, pr = component_distributions(state)
    return float(np.minimum(pl, pr).sum())


def averaged_probability_overlap(trajectory: Sequence[WalkerState]) -> float:
    if len(trajectory) < 2:
        raise ValueError("trajectory needs at least one step")
    return float(np.mean([probability_overlap(s) for s in trajectory[1:]]))


def survival(trajectory: Sequence[WalkerState]) -> tuple[NDArray[np.complex128], NDArray[np.float64]]:
    """Survival amplitude nu(t) = <psi(0)|psi(t)> and |nu(t)|^2 for t = 0..T."""
    psi0 = trajectory[0]
    nu = np.array([psi0.inner(s) for s in trajectory], dtype=np.complex128)
    return nu, np.abs(nu) ** 2


def cesaro_average(trajectory_or_probs) -> NDArray[np.float64]:
    """
    Running averages (1/T) sum_{t=1}^{T} |nu(t)|^2 for T = 1..len-1.

    Accepts either a trajectory of states or the |nu(t)|^2 series itself
    (index 0 being t = 0, which is excluded from the average).
    """
    seq = list(trajectory_or_probs)
    if seq and isinstance(seq[0], WalkerState):
        probs = survival(seq)[1]
    else:
        probs = np.asarray(seq, dtype=float)
    tail = probs[1:]
    return np.cumsum(tail) / np.arange(1, tail.size + 1)


def uniform_state(T: int) -> WalkerState:
    """
    Equal-weight state over every (x, c) with |x| <= T, on a 2T + 1 lattice.

    Every basis state gets amplitude 1 / sqrt(2 (2T + 1)) so the norm is one.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    n = 2 * T + 1
    amp = 1.0 / np.sqrt(2.0 * n)
    return WalkerState(n, np.full(2 * n, amp, dtype=np.complex128))


def uniform_references(T: int) -> dict:
    """Closed-form survival curves of an ideally uniform walker, plus its state."""
    if T < 1:
        raise ValueError("T must be >= 1")
    t = np.arange(T + 1)
    nu = 1.0 / np.sqrt(t + 1.0)
    cesaro = np.cumsum(1.0 / (t[1:] + 1.0)) / t[1:]
    return {"t": t, "nu": nu, "cesaro": cesaro, "state": uniform_state(T)}


def sequence_distance(seq_a, seq_b) -> float:
    """
    sum |theta_a - theta_b| / sum theta_a, with ``seq_a`` the reference optimum.

    Accepts CoinSequence objects or plain theta arrays.
    """
    a = seq_a.thetas if isinstance(seq_a, CoinSequence) else np.asarray(seq_a, float)
    b = seq_b.thetas if isinstance(seq_b, CoinSequence) else np.asarray(seq_b, float)
    if a.shape != b.shape:
        raise ValueError("sequences must have equal length")
    denom = a.sum()
    if denom == 0:
        raise ValueError("reference sequence has zero total angle")
    return float(np.abs(a - b).sum() / denom)


@dataclass(frozen=True)
class StepRecord:
    t: int
    entropy: float
    max_entropy: float
    variance: float
    uniform_variance: float
    entanglement: float
    amplitude_overlap: float
    probability_overlap: float
    survival_re: float
    survival_im: float
    survival_prob: float
    cesaro: float


@dataclass
class TrajectoryReport:
    """
    Per-step diagnostics of one walk. CSV columns follow ``COLUMNS`` order.

    ``uniform_variance`` and ``cesaro`` are NaN at t = 0 where they are undefined.
    """

    records: list[StepRecord]
    thetas: list[float]
    n_sites: int

    COLUMNS = tuple(StepRecord.__dataclass_fields__)

    def column(self, name: str) -> NDArray[np.float64]:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def to_csv(self) -> str:
        from .io import format_float

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for r in self.records:
            w.writerow(
                [r.t] + [format_float(getattr(r, c)) for c in self.COLUMNS[1:]]
            )
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "n_sites": self.n_sites,
            "thetas": list(self.thetas),
            "columns": list(self.COLUMNS),
            "records": [asdict(r) for r in self.records],
        }

    def to_json(self) -> str:
        from .io import dumps

        return dumps(self.to_dict())


def trajectory_report(trajectory: Sequence[WalkerState], thetas: Sequence[float] = ()) -> TrajectoryReport:
    """Compute every per-step diagnostic along a trajectory."""
    nu, nu2 = survival(trajectory)
    ces = cesaro_average(nu2)
    records = []
    for t, state in enumerate(trajectory):
        p = position_distribution(state)
        records.append(
            StepRecord(
                t=t,
                entropy=shannon_entropy(p),
                max_entropy=max_entropy(t),
                variance=variance(p),
                uniform_variance=uniform_variance(t) if t >= 1 else float("nan"),
                entanglement=entanglement_entropy(state),
                amplitude_overlap=amplitude_overlap(state),
                probability_overlap=probability_overlap(state),
                survival_re=float(nu[t].real),
                survival_im=float(nu[t].imag),
                survival_prob=float(nu2[t]),
                cesaro=float(ces[t - 1]) if t >= 1 else float("nan"),
            )
        )
    return TrajectoryReport(records, [float(x) for x in thetas], trajectory[0].n_sites)


def simulate_report(seq: CoinSequence, n_sites: int | None = None) -> tuple[list[WalkerState], TrajectoryReport]:
    n = 2 * len(seq) + 1 if n_sites is None else n_sites
    traj = evolve(symmetric_initial_state(n), seq)
    return traj, trajectory_report(traj, seq.thetas)
