"""
Quasi-energy spectra of walk evolution operators.

The dense operator of one step is S (I (x) B) on the 2N-dimensional cyclic
lattice, with the same basis ordering as :mod:`coinwalk.walk`. Quasi-energies
are eps = i log(lambda) = -arg(lambda), mapped into (-pi, pi].
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .walk import HALF_PI, CoinSequence, coin_batch

__all__ = [
    "SpectrumReport",
    "step_operator",
    "total_operator",
    "quasi_energies",
    "gap_evolution",
    "dispersion_constant_coin",
    "group_velocity",
    "effective_mass",
    "sequence_hash",
]

ZERO_TOL = 1e-9


def _shift_operator(n_sites: int) -> NDArray[np.float64]:
    dim = 2 * n_sites
    S = np.zeros((dim, dim))
    p = np.arange(n_sites)
    S[2 * ((p + 1) % n_sites), 2 * p] = 1.0
    S[2 * ((p - 1) % n_sites) + 1, 2 * p + 1] = 1.0
    return S


def step_operator(coin: NDArray[np.complex128], n_sites: int) -> NDArray[np.complex128]:
    """Dense 2N x 2N matrix of one coin toss plus cyclic shift."""
    if n_sites < 1 or n_sites % 2 == 0:
        raise ValueError(f"n_sites must be a positive odd integer, got {n_sites}")
    return _shift_operator(n_sites) @ np.kron(np.eye(n_sites), coin)


def total_operator(seq: CoinSequence, n_sites: int) -> NDArray[np.complex128]:
    """U(T) = U_T ... U_1 for the whole sequence."""
    return _prefix_products(seq, n_sites)[-1]


def _prefix_products(seq: CoinSequence, n_sites: int) -> list[NDArray[np.complex128]]:
    S = _shift_operator(n_sites)
    eye = np.eye(n_sites)
    U = np.eye(2 * n_sites, dtype=np.complex128)
    out = []
    for coin in seq.coins():
        U = S @ (np.kron(eye, coin) @ U)
        out.append(U)
    return out


def sequence_hash(seq: CoinSequence) -> str:
    angles = np.stack([seq.xis, seq.thetas, seq.zetas]).astype("<f8")
    return hashlib.sha256(angles.tobytes()).hexdigest()[:16]


@dataclass
class SpectrumReport:
    """Sorted quasi-energies of a unitary, with gap and density of states."""

    quasi_energies: NDArray[np.float64]
    gap: float
    dos_edges: NDArray[np.float64]
    dos_counts: NDArray[np.int64]
    n_sites: int
    sequence_hash: str = ""
    max_modulus_error: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def dos_centers(self) -> NDArray[np.float64]:
        return 0.5 * (self.dos_edges[1:] + self.dos_edges[:-1])

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "n_sites": self.n_sites,
            "sequence_hash": self.sequence_hash,
            "gap": self.gap,
            "max_modulus_error": self.max_modulus_error,
            "quasi_energies": self.quasi_energies.tolist(),
            "dos": {"edges": self.dos_edges.tolist(), "counts": self.dos_counts.tolist()},
            **self.extras,
        }


def _branch(eps: NDArray[np.float64]) -> NDArray[np.float64]:
    # map [-pi, pi) onto (-pi, pi]
    return np.where(eps <= -np.pi, eps + 2 * np.pi, eps)


def quasi_energies(
    U: NDArray[np.complex128],
    bins: int = 64,
    dos_range: tuple[float, float] | None = None,
    n_sites: int | None = None,
    seq_hash: str = "",
) -> SpectrumReport:
    """
    Diagonalize a unitary and collect its quasi-energy spectrum.

    The density of states is a histogram with ``bins`` uniform bins over
    ``dos_range`` (default: the whole (-pi, pi] zone, so counts sum to 2N).

    Raises
    ------
    ValueError
        If ``U`` deviates from unitarity by more than 1e-8.
    """
    U = np.asarray(U, dtype=np.complex128)
    dim = U.shape[0]
    dev = np.max(np.abs(U.conj().T @ U - np.eye(dim)))
    if dev > 1e-8:
        raise ValueError(f"operator is not unitary (max |U^dag U - I| = {dev:.3g})")
    lam = np.linalg.eigvals(U)
    eps = np.sort(_branch(-np.angle(lam)))
    positive = eps[eps > ZERO_TOL]
    gap = float(positive.min()) if positive.size else float("nan")
    lo, hi = dos_range if dos_range is not None else (-np.pi, np.pi)
    counts, edges = np.histogram(eps, bins=bins, range=(lo, hi))
    return SpectrumReport(
        quasi_energies=eps,
        gap=gap,
        dos_edges=edges,
        dos_counts=counts,
        n_sites=n_sites if n_sites is not None else dim // 2,
        sequence_hash=seq_hash,
        max_modulus_error=float(np.max(np.abs(np.abs(lam) - 1.0))),
    )


def gap_evolution(seq: CoinSequence, n_sites: int) -> list[tuple[int, float]]:
    """Smallest positive quasi-energy of every prefix product U(t), t = 1..T."""
    return [
        (t, quasi_energies(U, n_sites=n_sites).gap)
        for t, U in enumerate(_prefix_products(seq, n_sites), start=1)
    ]


def dispersion_constant_coin(theta: float, n_sites: int) -> dict[str, NDArray[np.float64]]:
    """
    Two quasi-energy bands of a constant real coin on the cyclic lattice.

    In momentum space each k = 2 pi m / N carries the 2x2 block
    diag(e^{-ik}, e^{ik}) B(theta). Bands are followed through k by
    eigenvector continuity, starting with ``plus`` as the band through
    eps = 0 at k = 0. Because det B = -1 the two bands always satisfy
    eps_plus + eps_minus = pi (mod 2 pi).
    """
    if n_sites < 1:
        raise ValueError("n_sites must be positive")
    k = 2.0 * np.pi * np.arange(n_sites) / n_sites
    coin = coin_batch(HALF_PI, theta, HALF_PI)
    blocks = np.zeros((n_sites, 2, 2), dtype=np.complex128)
    blocks[:, 0, :] = np.exp(-1j * k)[:, None] * coin[0]
    blocks[:, 1, :] = np.exp(1j * k)[:, None] * coin[1]
    lam, vecs = np.linalg.eig(blocks)
    order = np.empty((n_sites, 2), dtype=int)
    order[0] = (0, 1) if lam[0, 0].real >= lam[0, 1].real else (1, 0)
    for m in range(1, n_sites):
        prev = vecs[m - 1][:, order[m - 1]]
        ov = np.abs(prev.conj().T @ vecs[m])
        order[m] = (0, 1) if ov[0, 0] + ov[1, 1] >= ov[0, 1] + ov[1, 0] else (1, 0)
    eps = _branch(-np.angle(np.take_along_axis(lam, order, axis=1)))
    return {"k": k, "plus": eps[:, 0], "minus": eps[:, 1]}


def group_velocity(dispersion: dict[str, NDArray[np.float64]], band: str = "plus") -> NDArray[np.float64]:
    """d eps / dk by central differences on the periodic k grid."""
    k, eps = dispersion["k"], dispersion[band]
    dk = 2.0 * np.pi / k.size
    diff = np.roll(eps, -1) - np.roll(eps, 1)
    diff = (diff + np.pi) % (2.0 * np.pi) - np.pi
    return diff / (2.0 * dk)


def effective_mass(theta: float) -> float:
    """
    sqrt(2 (sec theta - 1) / cos theta); ``inf`` at theta = pi/2.
    """
    if not 0.0 <= theta <= HALF_PI:
        raise ValueError(f"theta must lie in [0, pi/2], got {theta!r}")
    c = np.cos(theta)
    if theta == HALF_PI or c <= 0.0:
        return float("inf")
    return float(np.sqrt(2.0 * (1.0 / c - 1.0) / c))
