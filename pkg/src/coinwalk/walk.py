"""
Coined discrete-time quantum walk on a cyclic 1D lattice.

Amplitudes are stored as a flat complex vector of length 2N, where entry
``2 * p + c`` holds the amplitude at array position ``p`` with coin state
``c`` (0 = R, 1 = L). Physical position ``x`` maps to ``p = x + (N - 1) / 2``.

A single step applies the coin on every site and then shifts the R
component one site to the right and the L component one site to the left,
wrapping around at the ends.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "HALF_PI",
    "CoinParams",
    "CoinSequence",
    "WalkerState",
    "coin_matrix",
    "coin_batch",
    "symmetric_initial_state",
    "step",
    "evolve",
    "position_distribution",
    "component_distributions",
    "batch_trajectory",
    "batch_distributions",
]

HALF_PI = 0.5 * np.pi
TWO_PI = 2.0 * np.pi
R, L = 0, 1


@dataclass(frozen=True)
class CoinParams:
    """Angles (xi, theta, zeta) of one coin toss, in radians.

    The default ``xi = zeta = pi/2`` gives the real one-parameter coin.
    """

    theta: float
    xi: float = HALF_PI
    zeta: float = HALF_PI

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta <= HALF_PI:
            raise ValueError(f"theta must lie in [0, pi/2], got {self.theta!r}")
        for name in ("xi", "zeta"):
            value = getattr(self, name)
            if not 0.0 <= value < TWO_PI:
                raise ValueError(f"{name} must lie in [0, 2pi), got {value!r}")

    @property
    def theta_only(self) -> bool:
        return self.xi == HALF_PI and self.zeta == HALF_PI


@dataclass(frozen=True)
class CoinSequence:
    """Ordered coin parameters for steps t = 1..T."""

    steps: tuple[CoinParams, ...]

    def __post_init__(self) -> None:
        steps = tuple(self.steps)
        if len(steps) < 1:
            raise ValueError("a coin sequence needs at least one step")
        for s in steps:
            if not isinstance(s, CoinParams):
                raise TypeError(f"expected CoinParams, got {type(s).__name__}")
        object.__setattr__(self, "steps", steps)

    @classmethod
    def from_thetas(cls, thetas: Iterable[float]) -> "CoinSequence":
        return cls(tuple(CoinParams(float(t)) for t in thetas))

    @classmethod
    def from_angles(
        cls, xis: Sequence[float], thetas: Sequence[float], zetas: Sequence[float]
    ) -> "CoinSequence":
        if not len(xis) == len(thetas) == len(zetas):
            raise ValueError("xi, theta and zeta lists must have equal length")
        return cls(
            tuple(
                CoinParams(float(t), float(x), float(z))
                for x, t, z in zip(xis, thetas, zetas)
            )
        )

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __getitem__(self, i):
        return self.steps[i]

    @property
    def thetas(self) -> NDArray[np.float64]:
        return np.array([s.theta for s in self.steps], dtype=float)

    @property
    def xis(self) -> NDArray[np.float64]:
        return np.array([s.xi for s in self.steps], dtype=float)

    @property
    def zetas(self) -> NDArray[np.float64]:
        return np.array([s.zeta for s in self.steps], dtype=float)

    @property
    def theta_only(self) -> bool:
        return all(s.theta_only for s in self.steps)

    def coins(self) -> NDArray[np.complex128]:
        """Stacked coin matrices, shape (T, 2, 2)."""
        return coin_batch(self.xis, self.thetas, self.zetas)


@dataclass(frozen=True, eq=False)
class WalkerState:
    """Normalized walker state on a cyclic lattice of ``n_sites`` positions."""

    n_sites: int
    amplitudes: NDArray[np.complex128] = field(repr=False)

    def __post_init__(self) -> None:
        n = self.n_sites
        if not isinstance(n, (int, np.integer)) or n < 1 or n % 2 == 0:
            raise ValueError(f"n_sites must be a positive odd integer, got {n!r}")
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size != 2 * n:
            raise ValueError(f"expected {2 * n} amplitudes, got {amps.size}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        amps.flags.writeable = False
        object.__setattr__(self, "n_sites", int(n))
        object.__setattr__(self, "amplitudes", amps)

    @property
    def origin_index(self) -> int:
        return (self.n_sites - 1) // 2

    @property
    def positions(self) -> NDArray[np.int64]:
        """Physical coordinate x of every array position."""
        return np.arange(self.n_sites) - self.origin_index

    @property
    def field(self) -> NDArray[np.complex128]:
        """Read-only (N, 2) view: column 0 is R, column 1 is L."""
        return self.amplitudes.reshape(self.n_sites, 2)

    def index_of(self, x: int) -> int:
        return int(x) + self.origin_index

    def inner(self, other: "WalkerState") -> complex:
        """<self|other>."""
        if other.n_sites != self.n_sites:
            raise ValueError("states live on lattices of different size")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    @classmethod
    def from_field(cls, psi: NDArray[np.complex128]) -> "WalkerState":
        psi = np.asarray(psi, dtype=np.complex128)
        return cls(psi.shape[0], psi.reshape(-1))

    @classmethod
    def localized(cls, n_sites: int, x: int, coin: Sequence[complex]) -> "WalkerState":
        """State sitting on position ``x`` with coin spinor ``(c_R, c_L)``."""
        psi = np.zeros((n_sites, 2), dtype=np.complex128)
        psi[int(x) + (n_sites - 1) // 2] = coin
        return cls.from_field(psi)


def coin_matrix(params: CoinParams) -> NDArray[np.complex128]:
    """
    SU(2) coin in the (R, L) basis, first column being the image of |R>.

    The general three-angle matrix is multiplied by the constant phase -i so
    that ``xi = zeta = pi/2`` yields the real coin
    ``[[cos t, sin t], [sin t, -cos t]]`` (Hadamard at t = pi/4).
    """
    if not isinstance(params, CoinParams):
        raise TypeError(f"expected CoinParams, got {type(params).__name__}")
    return coin_batch(
        np.array([params.xi]), np.array([params.theta]), np.array([params.zeta])
    )[0]


def coin_batch(xi, theta, zeta) -> NDArray[np.complex128]:
    """Vectorized :func:`coin_matrix` without range checks; shape (..., 2, 2)."""
    xi, theta, zeta = np.broadcast_arrays(
        np.asarray(xi, float), np.asarray(theta, float), np.asarray(zeta, float)
    )
    c, s = np.cos(theta), np.sin(theta)
    out = np.empty(theta.shape + (2, 2), dtype=np.complex128)
    # -i * e^{i a} = e^{i (a - pi/2)}
    out[..., 0, 0] = np.exp(1j * (xi - HALF_PI)) * c
    out[..., 0, 1] = np.exp(1j * (zeta - HALF_PI)) * s
    out[..., 1, 0] = -np.exp(-1j * (zeta + HALF_PI)) * s
    out[..., 1, 1] = np.exp(-1j * (xi + HALF_PI)) * c
    # keep the theta-only coin exactly real
    real = ((xi == HALF_PI) & (zeta == HALF_PI))[..., None, None]
    if np.any(real):
        plain = np.empty_like(out)
        plain[..., 0, 0] = c
        plain[..., 0, 1] = s
        plain[..., 1, 0] = s
        plain[..., 1, 1] = -c
        out = np.where(real, plain, out)
    return out


def symmetric_initial_state(n_sites: int) -> WalkerState:
    """(|0,R> + i|0,L>) / sqrt(2): the left-right symmetric starting state."""
    if not isinstance(n_sites, (int, np.integer)) or n_sites < 3 or n_sites % 2 == 0:
        raise ValueError(f"n_sites must be odd and >= 3, got {n_sites!r}")
    a = 1.0 / np.sqrt(2.0)
    return WalkerState.localized(int(n_sites), 0, (a, 1j * a))


def _apply_step(psi: NDArray[np.complex128], coin: NDArray[np.complex128]) -> NDArray[np.complex128]:
    # psi: (..., N, 2); coin: (..., 2, 2) broadcast over the site axis
    a = coin[..., 0, 0, None]
    b = coin[..., 0, 1, None]
    c = coin[..., 1, 0, None]
    d = coin[..., 1, 1, None]
    r, l = psi[..., R], psi[..., L]
    new_r = a * r + b * l
    out = np.empty(new_r.shape + (2,), dtype=np.complex128)
    out[..., R] = np.roll(new_r, 1, axis=-1)
    out[..., L] = np.roll(c * r + d * l, -1, axis=-1)
    return out


def step(state: WalkerState, params: CoinParams) -> WalkerState:
    """One coin toss followed by the cyclic conditional shift."""
    psi = _apply_step(state.field, coin_matrix(params))
    return WalkerState(state.n_sites, psi.reshape(-1))


def evolve(
    initial: WalkerState, seq: CoinSequence, boundary_free: bool = False
) -> list[WalkerState]:
    """
    States after 0, 1, ..., T steps (T + 1 entries).

    With ``boundary_free=True`` the lattice must hold the full light cone,
    i.e. ``n_sites >= 2T + 1``, so that the cyclic wrap is never reached.
    """
    if boundary_free and initial.n_sites < 2 * len(seq) + 1:
        raise ValueError(
            f"boundary-free evolution of {len(seq)} steps needs n_sites >= "
            f"{2 * len(seq) + 1}, got {initial.n_sites}"
        )
    states = [initial]
    psi = initial.field
    for coin in seq.coins():
        psi = _apply_step(psi, coin)
        states.append(WalkerState(initial.n_sites, psi.reshape(-1)))
    return states


def position_distribution(state: WalkerState) -> NDArray[np.float64]:
    """P_x = |psi_{x,L}|^2 + |psi_{x,R}|^2 over array positions."""
    return np.sum(np.abs(state.field) ** 2, axis=1)


def component_distributions(state: WalkerState) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """(P_L, P_R): the unnormalized position distributions of each coin component."""
    prob = np.abs(state.field) ** 2
    return prob[:, L].copy(), prob[:, R].copy()


def batch_trajectory(
    coins: NDArray[np.complex128], n_sites: int | None = None, psi0: NDArray | None = None
) -> NDArray[np.complex128]:
    """
    Evolve many coin sequences at once from the symmetric initial state.

    Parameters
    ----------
    coins : array, shape (B, T, 2, 2)
        Per-step coin matrices for B independent walks.
    n_sites : int, optional
        Lattice size, defaults to 2T + 1.
    psi0 : array, shape (N, 2), optional
        Alternative initial field shared by all walks.

    Returns
    -------
    array, shape (B, T + 1, N, 2)
    """
    coins = np.asarray(coins, dtype=np.complex128)
    B, T = coins.shape[:2]
    n = 2 * T + 1 if n_sites is None else int(n_sites)
    if psi0 is None:
        psi0 = symmetric_initial_state(n).field
    out = np.empty((B, T + 1, n, 2), dtype=np.complex128)
    out[:, 0] = psi0
    for t in range(T):
        out[:, t + 1] = _apply_step(out[:, t], coins[:, t])
    return out


def batch_distributions(
    coins: NDArray[np.complex128], n_sites: int | None = None
) -> NDArray[np.float64]:
    """Position distributions of :func:`batch_trajectory`, shape (B, T + 1, N)."""
    coins = np.asarray(coins, dtype=np.complex128)
    B, T = coins.shape[:2]
    n = 2 * T + 1 if n_sites is None else int(n_sites)
    psi = np.broadcast_to(symmetric_initial_state(n).field, (B, n, 2)).copy()
    out = np.empty((B, T + 1, n))
    out[:, 0] = np.sum(psi.real**2 + psi.imag**2, axis=-1)
    for t in range(T):
        psi = _apply_step(psi, coins[:, t])
        out[:, t + 1] = np.sum(psi.real**2 + psi.imag**2, axis=-1)
    return out
