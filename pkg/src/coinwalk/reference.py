"""
Closed-form ground truth for short walks from the symmetric initial state.

For the real coin, the first few steps admit exact position probabilities.
Perfect uniformity is reachable at t = 1, 2, 3 with theta_2 = arctan(1/sqrt 2)
and theta_3 = pi/6, and is impossible at t = 4 whatever theta_4 is. The grid
scan in :func:`verify_t4_incompatibility` checks the latter without relying
on the closed forms.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from numpy.typing import NDArray

from .walk import HALF_PI, _apply_step, batch_distributions, batch_trajectory, coin_batch

__all__ = [
    "THETA_2",
    "THETA_3",
    "closed_form_thetas",
    "symbolic_probabilities",
    "uniformity_residual",
    "uniformity_residual_batch",
    "FeasibilityResult",
    "verify_t4_incompatibility",
    "long_time_theta",
]

THETA_2 = float(np.arctan(1.0 / np.sqrt(2.0)))
THETA_3 = float(np.pi / 6.0)


def closed_form_thetas() -> dict[str, float]:
    return {"theta_2": THETA_2, "theta_3": THETA_3}


def symbolic_probabilities(t: int, theta: float) -> dict[int, float]:
    """
    Exact P_x at step t in {1, 2, 3, 4} as a function of the last angle.

    For t = 3 the previous angles are taken at their uniform solution
    (theta_2); for t = 4 at (theta_2, theta_3). theta_1 never matters.
    """
    c2, s2 = np.cos(theta) ** 2, np.sin(theta) ** 2
    cs = np.cos(theta) * np.sin(theta)
    if t == 1:
        return {-1: 0.5, 1: 0.5}
    if t == 2:
        return {-2: 0.5 * c2, 0: s2, 2: 0.5 * c2}
    if t == 3:
        outer = c2 / 3.0
        inner = 0.5 - c2 / 3.0
        return {-3: outer, -1: inner, 1: inner, 3: outer}
    if t == 4:
        edge = 0.25 * c2
        mid = 1.0 / 3.0 - c2 / 6.0 + np.sqrt(2.0) * cs / 12.0
        # the cross term is twice that of ``mid`` so the five values sum to one
        centre = 1.0 / 3.0 - c2 / 6.0 - np.sqrt(2.0) * cs / 6.0
        return {-4: edge, -2: mid, 0: centre, 2: mid, 4: edge}
    raise ValueError(f"closed forms exist for t in 1..4, got {t}")


def _parity_mask(n_sites: int, t: int) -> NDArray[np.bool_]:
    x = np.arange(n_sites) - (n_sites - 1) // 2
    return (np.abs(x) <= t) & ((x + t) % 2 == 0)


def uniformity_residual_batch(thetas: NDArray[np.float64], t: int) -> NDArray[np.float64]:
    """
    max_x |P_x(t) - 1/(t+1)| over the t + 1 sites of matching parity.

    ``thetas`` has shape (B, >= t); only the first t angles are used.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))[:, :t]
    if thetas.shape[1] < t:
        raise ValueError(f"need at least {t} angles, got {thetas.shape[1]}")
    if t == 0:
        return np.zeros(thetas.shape[0])
    n = 2 * t + 1
    coins = coin_batch(HALF_PI, thetas, HALF_PI)
    probs = batch_distributions(coins, n)[:, t]
    mask = _parity_mask(n, t)
    return np.max(np.abs(probs[:, mask] - 1.0 / (t + 1)), axis=-1)


def uniformity_residual(thetas, t: int) -> float:
    return float(uniformity_residual_batch(np.asarray(thetas, float)[None], t)[0])


@dataclass(frozen=True)
class FeasibilityResult:
    """
    Outcome of a brute-force search for a step-by-step uniform walk.

    ``residual`` is the grid minimum of max_{t <= T} uniformity_residual(t).
    """

    T: int
    residual: float
    arg_min: tuple[float, ...]
    grid_resolution: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["arg_min"] = list(self.arg_min)
        d["schema_version"] = 1
        return d


def _step_deviation(probs: NDArray[np.float64], t: int) -> NDArray[np.float64]:
    mask = _parity_mask(probs.shape[-1], t)
    return np.max(np.abs(probs[..., mask] - 1.0 / (t + 1)), axis=-1)


def verify_t4_incompatibility(
    grid_resolution: int = 200, T: int = 4, theta_1: float = np.pi / 4, chunk: int = 512
) -> FeasibilityResult:
    """
    Scan (theta_2, ..., theta_T) on a uniform grid over [0, pi/2] and return
    the smallest worst-step deviation from uniformity.

    Prefixes (theta_2..theta_{T-1}) are evolved once; the last angle is
    fanned out over the grid in a single vectorized step. The cost still
    grows as ``grid_resolution ** (T - 1)``.
    """
    if grid_resolution < 2:
        raise ValueError("grid_resolution must be >= 2")
    if T < 2:
        raise ValueError("T must be >= 2")
    n = 2 * T + 1
    axis = np.linspace(0.0, HALF_PI, grid_resolution)
    last = coin_batch(HALF_PI, axis, HALF_PI)  # (res, 2, 2)
    dims = T - 2
    total = grid_resolution**dims
    best, best_arg = np.inf, ()
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total))
        if dims:
            sub = np.stack(np.unravel_index(idx, (grid_resolution,) * dims), axis=-1)
        else:
            sub = np.empty((idx.size, 0), dtype=int)
        thetas = np.empty((idx.size, T - 1))
        thetas[:, 0] = theta_1
        thetas[:, 1:] = axis[sub]
        psi = batch_trajectory(coin_batch(HALF_PI, thetas, HALF_PI), n)
        probs = np.sum(np.abs(psi) ** 2, axis=-1)
        worst = np.zeros(idx.size)
        for t in range(1, T):
            np.maximum(worst, _step_deviation(probs[:, t], t), out=worst)
        # fan out the final angle: (chunk, res, N, 2)
        final = _apply_step(psi[:, -1, None], last[None])
        dev = _step_deviation(np.sum(np.abs(final) ** 2, axis=-1), T)
        res = np.maximum(worst[:, None], dev)
        i, j = np.unravel_index(int(np.argmin(res)), res.shape)
        if res[i, j] < best:
            best = float(res[i, j])
            best_arg = tuple(float(v) for v in thetas[i, 1:]) + (float(axis[j]),)
    return FeasibilityResult(T=T, residual=best, arg_min=best_arg, grid_resolution=grid_resolution)


def long_time_theta(t, constant: float = 8.0):
    """
    Slowly decaying angle estimate 0.5 * arcsin(min(1, constant / t)).

    The clamp makes early steps (t < constant) return pi/4.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 1):
        raise ValueError("t must be >= 1")
    out = 0.5 * np.arcsin(np.minimum(1.0, constant / t_arr))
    return float(out) if out.ndim == 0 else out
