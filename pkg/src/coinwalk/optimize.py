"""
Coin-sequence optimization: multi-start projected gradient descent.

Three objectives are supported:

``global``
    minimize the whole-history spread deficit F over all angles at once;
``stepwise``
    fix the angles found so far and choose each new angle greedily;
``final_step``
    minimize F', which only looks at the last step.

Randomness comes from Philox generators keyed by ``(seed, restart index)``,
so restart ``i`` starts from the same point whatever the total restart count.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import minimize, minimize_scalar

from .metrics import (
    entropy_batch,
    final_step_objective_batch,
    sequence_distance,
    spread_objective_batch,
    spread_objective_from_entropies,
)
from .reference import long_time_theta
from .walk import HALF_PI, TWO_PI, CoinSequence, _apply_step, coin_batch, symmetric_initial_state

__all__ = [
    "MODES",
    "PARAMETER_SETS",
    "SearchSettings",
    "LedgerEntry",
    "OptimizationRun",
    "RobustnessScan",
    "numerical_gradient",
    "minimize_global",
    "minimize_stepwise",
    "minimize_final_step",
    "robustness_scan",
    "heuristic_seed",
    "restart_generator",
    "prefix_objectives",
]

MODES = ("global", "stepwise", "final_step")
PARAMETER_SETS = ("theta_only", "full_su2")
SEARCH_METHODS = ("gd", "cg", "lbfgsb")
FIRST_THETA = np.pi / 4
RNG_NAME = "numpy.random.Philox(SeedSequence(seed, spawn_key=(index,)))"


def restart_generator(seed: int, index: int) -> np.random.Generator:
    """Independent counter-based stream for restart (or noise sample) ``index``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(index),))))


def heuristic_seed(T: int, constant: float = 8.0) -> CoinSequence:
    """Slowly decaying angle schedule usable as a starting point."""
    if T < 1:
        raise ValueError("T must be >= 1")
    return CoinSequence.from_thetas(long_time_theta(np.arange(1, T + 1), constant))


def numerical_gradient(
    objective: Callable,
    point: Sequence[float],
    step_size: float = 1e-6,
    lower: Sequence[float] | None = None,
    upper: Sequence[float] | None = None,
    vectorized: bool = False,
) -> NDArray[np.float64]:
    """
    Central-difference gradient, one-sided where a box bound is within reach.

    With ``vectorized=True`` the objective receives all 2d probe points as a
    (2d, d) array in one call and must return a length-2d array.
    """
    x = np.asarray(point, dtype=float)
    d = x.size
    lo = np.full(d, -np.inf) if lower is None else np.asarray(lower, float)
    hi = np.full(d, np.inf) if upper is None else np.asarray(upper, float)
    plus = np.minimum(x + step_size, hi)
    minus = np.maximum(x - step_size, lo)
    probes = np.repeat(x[None], 2 * d, axis=0)
    idx = np.arange(d)
    probes[idx, idx] = plus
    probes[d + idx, idx] = minus
    if vectorized:
        values = np.asarray(objective(probes), dtype=float)
    else:
        values = np.array([objective(p) for p in probes], dtype=float)
    return (values[:d] - values[d:]) / (plus - minus)


@dataclass(frozen=True)
class SearchSettings:
    """Local-search hyperparameters; stored with every run."""

    method: str = "lbfgsb"
    max_iter: int = 500
    ftol: float = 1e-12
    gtol: float = 1e-8
    step_size: float = 1e-6
    initial_step: float = 1.0
    armijo: float = 1e-4
    max_backtracks: int = 60
    max_move: float = 0.25

    def __post_init__(self) -> None:
        if self.method not in SEARCH_METHODS:
            raise ValueError(f"unknown method {self.method!r}; use one of {SEARCH_METHODS}")


class _Problem:
    """Maps flat parameter vectors to coin stacks and objective values."""

    def __init__(self, T: int, parameter_set: str, objective: str, n_sites: int | None = None):
        if T < 1:
            raise ValueError("T must be >= 1")
        if parameter_set not in PARAMETER_SETS:
            raise ValueError(f"unknown parameter set {parameter_set!r}")
        self.T = T
        self.parameter_set = parameter_set
        self.n_sites = n_sites
        self.evaluations = 0
        self._value = {
            "F": spread_objective_batch,
            "F'": final_step_objective_batch,
        }[objective]
        if parameter_set == "theta_only":
            self.dim = T - 1
            self.lower = np.zeros(self.dim)
            self.upper = np.full(self.dim, HALF_PI)
        else:
            self.dim = 3 * T
            self.lower = np.concatenate([np.full(T, -np.inf), np.zeros(T), np.full(T, -np.inf)])
            self.upper = np.concatenate([np.full(T, np.inf), np.full(T, HALF_PI), np.full(T, np.inf)])

    def angles(self, X: NDArray[np.float64]) -> tuple[NDArray, NDArray, NDArray]:
        X = np.atleast_2d(X)
        T = self.T
        if self.parameter_set == "theta_only":
            theta = np.concatenate([np.full((X.shape[0], 1), FIRST_THETA), X], axis=1)
            xi = zeta = np.full_like(theta, HALF_PI)
        else:
            xi = np.mod(X[:, :T], TWO_PI)
            theta = X[:, T : 2 * T]
            zeta = np.mod(X[:, 2 * T :], TWO_PI)
        return xi, theta, zeta

    def __call__(self, X: NDArray[np.float64]) -> NDArray[np.float64]:
        X = np.atleast_2d(X)
        self.evaluations += X.shape[0]
        return self._value(coin_batch(*self.angles(X)), self.n_sites)

    def value(self, x: NDArray[np.float64]) -> float:
        return float(self(x[None])[0])

    def sequence(self, x: NDArray[np.float64]) -> CoinSequence:
        xi, theta, zeta = (a[0] for a in self.angles(x[None]))
        theta = np.clip(theta, 0.0, HALF_PI)
        return CoinSequence.from_angles(xi, theta, zeta)

    def embed(self, seq: CoinSequence) -> NDArray[np.float64]:
        if len(seq) != self.T:
            raise ValueError(f"warm start has {len(seq)} steps, expected {self.T}")
        if self.parameter_set == "theta_only":
            return seq.thetas[1:].copy()
        return np.concatenate([seq.xis, seq.thetas, seq.zetas])

    def random_point(self, rng: np.random.Generator) -> NDArray[np.float64]:
        if self.parameter_set == "theta_only":
            return rng.uniform(0.0, HALF_PI, self.dim)
        T = self.T
        return np.concatenate(
            [rng.uniform(0.0, TWO_PI, T), rng.uniform(0.0, HALF_PI, T), rng.uniform(0.0, TWO_PI, T)]
        )


def _backtrack(problem, x, f, g, direction, alpha, settings):
    lo, hi = problem.lower, problem.upper
    for _ in range(settings.max_backtracks):
        x_new = np.clip(x + alpha * direction, lo, hi)
        delta = x_new - x
        if not np.any(delta):
            break
        f_new = problem.value(x_new)
        if f_new <= f + settings.armijo * float(g @ delta):
            return x_new, f_new, alpha
        alpha *= 0.5
    return None, f, alpha


def _local_search(problem: _Problem, x0: NDArray[np.float64], settings: SearchSettings) -> tuple[NDArray, float, int, bool]:
    """
    Projected gradient descent, PR+ conjugate gradient, or scipy L-BFGS-B on
    the box. Returns (x, f, iterations, converged).
    """
    lo, hi = problem.lower, problem.upper
    x = np.clip(np.asarray(x0, float), lo, hi)
    f = problem.value(x)
    if problem.dim == 0:
        return x, f, 0, True

    def grad(z):
        return numerical_gradient(problem, z, settings.step_size, lo, hi, vectorized=True)

    if settings.method == "lbfgsb":
        bounds = [(a if np.isfinite(a) else None, b if np.isfinite(b) else None) for a, b in zip(lo, hi)]
        res = minimize(
            problem.value, x, jac=grad, bounds=bounds, method="L-BFGS-B",
            options={"maxiter": settings.max_iter, "ftol": settings.ftol, "gtol": settings.gtol},
        )
        return np.clip(res.x, lo, hi), float(res.fun), int(res.nit), bool(res.success)

    alpha = settings.initial_step
    g_prev = d_prev = None
    for it in range(1, settings.max_iter + 1):
        g = grad(x)
        pg = x - np.clip(x - g, lo, hi)
        if np.linalg.norm(pg) < settings.gtol:
            return x, f, it, True
        direction = -g
        if settings.method == "cg" and g_prev is not None:
            beta = max(0.0, float(g @ (g - g_prev)) / max(float(g_prev @ g_prev), 1e-300))
            direction = -g + beta * d_prev
            if float(direction @ g) >= 0.0:
                direction = -g
        # drop components pushing against an active bound
        blocked = ((x <= lo) & (direction < 0)) | ((x >= hi) & (direction > 0))
        direction = np.where(blocked, 0.0, direction)
        if not np.any(direction):
            return x, f, it, True
        cap = settings.max_move / max(float(np.max(np.abs(direction))), 1e-300)
        x_new, f_new, alpha = _backtrack(problem, x, f, g, direction, min(alpha * 2.0, cap), settings)
        if x_new is None and settings.method == "cg":
            # conjugate step failed on the box; restart from steepest descent
            direction = np.where(blocked, 0.0, -g)
            cap = settings.max_move / max(float(np.max(np.abs(direction))), 1e-300)
            x_new, f_new, alpha = _backtrack(problem, x, f, g, direction, min(settings.initial_step, cap), settings)
        if x_new is None:
            return x, f, it, True
        g_prev, d_prev = g, direction
        change = f - f_new
        x, f = x_new, f_new
        if change < settings.ftol:
            return x, f, it, True
    return x, f, settings.max_iter, False


@dataclass
class LedgerEntry:
    restart: int
    sequence: CoinSequence
    value: float
    distance: float
    iterations: int
    converged: bool

    def to_dict(self) -> dict:
        return {
            "restart": self.restart,
            "value": self.value,
            "distance": self.distance,
            "iterations": self.iterations,
            "converged": self.converged,
            **_sequence_dict(self.sequence),
        }


def _sequence_dict(seq: CoinSequence) -> dict:
    out = {"thetas": seq.thetas.tolist()}
    if not seq.theta_only:
        out["xis"] = seq.xis.tolist()
        out["zetas"] = seq.zetas.tolist()
    return out


def _sequence_from_dict(d: dict) -> CoinSequence:
    if "xis" in d:
        return CoinSequence.from_angles(d["xis"], d["thetas"], d["zetas"])
    return CoinSequence.from_thetas(d["thetas"])


@dataclass
class OptimizationRun:
    """Result of a multi-start search plus the ledger of every local minimum."""

    mode: str
    parameter_set: str
    T: int
    restarts: int
    seed: int
    best_sequence: CoinSequence
    best_value: float
    ledger: list[LedgerEntry]
    evaluations: int
    wall_time: float
    settings: dict = field(default_factory=dict)
    trace: list[float] = field(default_factory=list)

    SCHEMA_VERSION = 1

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "schema_version": self.SCHEMA_VERSION,
            "mode": self.mode,
            "parameter_set": self.parameter_set,
            "T": self.T,
            "restarts": self.restarts,
            "seed": self.seed,
            "best_value": self.best_value,
            "best_sequence": _sequence_dict(self.best_sequence),
            "ledger": [e.to_dict() for e in self.ledger],
            "evaluations": self.evaluations,
            "settings": self.settings,
            "trace": list(self.trace),
        }
        if include_timing:
            d["wall_time"] = self.wall_time
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizationRun":
        ledger = [
            LedgerEntry(
                restart=e["restart"],
                sequence=_sequence_from_dict(e),
                value=e["value"],
                distance=e["distance"],
                iterations=e["iterations"],
                converged=e["converged"],
            )
            for e in d.get("ledger", [])
        ]
        return cls(
            mode=d["mode"],
            parameter_set=d["parameter_set"],
            T=d["T"],
            restarts=d["restarts"],
            seed=d["seed"],
            best_sequence=_sequence_from_dict(d["best_sequence"]),
            best_value=d["best_value"],
            ledger=ledger,
            evaluations=d.get("evaluations", 0),
            wall_time=d.get("wall_time", float("nan")),
            settings=d.get("settings", {}),
            trace=d.get("trace", []),
        )


def prefix_objectives(seq: CoinSequence, n_sites: int | None = None) -> list[float]:
    """F of every prefix t = 1..T of ``seq`` (a posteriori reconstruction)."""
    from .walk import batch_distributions

    probs = batch_distributions(seq.coins()[None], n_sites)[0]
    s = entropy_batch(probs[1:])
    return [float(spread_objective_from_entropies(s[:t])) for t in range(1, len(seq) + 1)]


def _run_restart(args) -> tuple[int, NDArray, float, int, bool, int]:
    T, parameter_set, objective, n_sites, seed, index, x0, settings = args
    problem = _Problem(T, parameter_set, objective, n_sites)
    if x0 is None:
        x0 = problem.random_point(restart_generator(seed, index))
    x, f, iters, ok = _local_search(problem, x0, settings)
    return index, x, f, iters, ok, problem.evaluations


def _multistart(
    mode: str,
    objective: str,
    T: int,
    parameter_set: str,
    restarts: int,
    seed: int,
    settings: SearchSettings | None,
    n_sites: int | None,
    threads: int,
    warm_start: CoinSequence | None,
    heuristic_start: bool,
) -> OptimizationRun:
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    settings = settings or SearchSettings()
    problem = _Problem(T, parameter_set, objective, n_sites)
    t0 = time.perf_counter()
    jobs = []
    if warm_start is not None:
        jobs.append((T, parameter_set, objective, n_sites, seed, -1, problem.embed(warm_start), settings))
    for i in range(restarts):
        x0 = None
        if heuristic_start and i == 0:
            x0 = problem.embed(heuristic_seed(T))
        jobs.append((T, parameter_set, objective, n_sites, seed, i, x0, settings))
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_restart, jobs))
    else:
        results = [_run_restart(j) for j in jobs]
    results.sort(key=lambda r: (r[2], r[0]))
    best_idx, best_x, best_f = results[0][:3]
    best_seq = problem.sequence(best_x)
    ledger = [
        LedgerEntry(
            restart=idx,
            sequence=problem.sequence(x),
            value=float(f),
            distance=sequence_distance(best_seq, problem.sequence(x)),
            iterations=iters,
            converged=ok,
        )
        for idx, x, f, iters, ok, _ in results
    ]
    trace = prefix_objectives(best_seq, n_sites) if objective == "F" else _final_trace(best_seq, n_sites)
    return OptimizationRun(
        mode=mode,
        parameter_set=parameter_set,
        T=T,
        restarts=restarts,
        seed=int(seed),
        best_sequence=best_seq,
        best_value=float(best_f),
        ledger=ledger,
        evaluations=sum(r[5] for r in results),
        wall_time=time.perf_counter() - t0,
        settings=_settings_dict(settings, n_sites, warm_start is not None, heuristic_start),
        trace=trace,
    )


def _final_trace(seq: CoinSequence, n_sites: int | None) -> list[float]:
    from .walk import batch_distributions

    probs = batch_distributions(seq.coins()[None], n_sites)[0]
    s = entropy_batch(probs[1:])
    return [float(1.0 - s[t - 1] / np.log(t + 1)) for t in range(1, len(seq) + 1)]


def _settings_dict(settings: SearchSettings, n_sites, warm: bool, heuristic: bool) -> dict:
    d = {k: getattr(settings, k) for k in SearchSettings.__dataclass_fields__}
    d.update(
        n_sites=n_sites,
        warm_start=warm,
        heuristic_start=heuristic,
        first_theta=FIRST_THETA,
        rng=RNG_NAME,
        gradient="central differences, one-sided at box bounds",
    )
    return d


def minimize_global(
    T: int,
    parameter_set: str = "theta_only",
    restarts: int = 50,
    seed: int = 0,
    settings: SearchSettings | None = None,
    n_sites: int | None = None,
    threads: int = 1,
    warm_start: CoinSequence | None = None,
    heuristic_start: bool = False,
) -> OptimizationRun:
    """
    Multi-start minimization of F over the whole sequence.

    Each restart draws theta uniformly in [0, pi/2] (and xi, zeta in [0, 2pi)
    for ``full_su2``). In ``theta_only`` mode theta_1 only contributes a
    global phase and is pinned to pi/4. A ``warm_start`` sequence is run as
    an extra restart with index -1.
    """
    return _multistart(
        "global", "F", T, parameter_set, restarts, seed, settings, n_sites, threads, warm_start, heuristic_start
    )


def minimize_final_step(
    T: int,
    restarts: int = 50,
    seed: int = 0,
    parameter_set: str = "theta_only",
    settings: SearchSettings | None = None,
    n_sites: int | None = None,
    threads: int = 1,
    warm_start: CoinSequence | None = None,
) -> OptimizationRun:
    """Multi-start minimization of F' = 1 - S(T)/log(T+1)."""
    return _multistart(
        "final_step", "F'", T, parameter_set, restarts, seed, settings, n_sites, threads, warm_start, False
    )


def minimize_stepwise(
    T: int, seed: int = 0, grid_points: int = 2048, xatol: float = 1e-10, n_sites: int | None = None
) -> OptimizationRun:
    """
    Greedy construction: theta_t maximizes S(t) given theta_1..theta_{t-1}.

    Maximizing S(t) with the earlier angles frozen is the same as minimizing
    the cumulative F up to t. Each 1D problem is solved by a grid scan
    followed by bounded Brent refinement around the best grid cell. The
    procedure has no randomness; ``seed`` is recorded only.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    t0 = time.perf_counter()
    n = 2 * T + 1 if n_sites is None else int(n_sites)
    grid = np.linspace(0.0, HALF_PI, grid_points)
    grid_coins = coin_batch(HALF_PI, grid, HALF_PI)
    psi = _apply_step(symmetric_initial_state(n).field, coin_batch(HALF_PI, FIRST_THETA, HALF_PI))
    thetas = [FIRST_THETA]
    entropies = [float(entropy_batch(np.sum(np.abs(psi) ** 2, axis=-1)))]
    evaluations = 1

    def neg_entropy(theta: float) -> float:
        nxt = _apply_step(psi, coin_batch(HALF_PI, theta, HALF_PI))
        return -float(entropy_batch(np.sum(np.abs(nxt) ** 2, axis=-1)))

    for _ in range(2, T + 1):
        cand = _apply_step(psi[None], grid_coins)
        s = entropy_batch(np.sum(np.abs(cand) ** 2, axis=-1))
        evaluations += grid_points
        k = int(np.argmax(s))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid_points - 1)]
        res = minimize_scalar(neg_entropy, bounds=(lo, hi), method="bounded", options={"xatol": xatol})
        evaluations += int(res.nfev)
        theta = float(res.x) if -res.fun >= s[k] else float(grid[k])
        psi = _apply_step(psi, coin_batch(HALF_PI, theta, HALF_PI))
        thetas.append(theta)
        entropies.append(float(entropy_batch(np.sum(np.abs(psi) ** 2, axis=-1))))
    seq = CoinSequence.from_thetas(thetas)
    trace = [float(spread_objective_from_entropies(np.array(entropies[:t]))) for t in range(1, T + 1)]
    settings = {
        "grid_points": grid_points,
        "xatol": xatol,
        "refinement": "scipy bounded Brent around best grid cell",
        "first_theta": FIRST_THETA,
        "n_sites": n_sites,
    }
    entry = LedgerEntry(0, seq, trace[-1], 0.0, T, True)
    return OptimizationRun(
        mode="stepwise",
        parameter_set="theta_only",
        T=T,
        restarts=1,
        seed=int(seed),
        best_sequence=seq,
        best_value=trace[-1],
        ledger=[entry],
        evaluations=evaluations,
        wall_time=time.perf_counter() - t0,
        settings=settings,
        trace=trace,
    )


@dataclass
class RobustnessScan:
    """
    Sensitivity of F to Gaussian angle noise of increasing amplitude.

    ``ratios[k]`` holds the N_s values of (F + floor) / (F0 + floor) at
    ``noise_amplitudes[k]``; the tiny floor keeps ratios finite when F0 is
    zero up to rounding (T <= 3).
    """

    noise_amplitudes: list[float]
    samples_per_amplitude: int
    ratios: list[NDArray[np.float64]]
    seed: int
    reference_value: float
    floor: float

    @property
    def mean_ratios(self) -> NDArray[np.float64]:
        return np.array([r.mean() for r in self.ratios])

    @property
    def std_ratios(self) -> NDArray[np.float64]:
        return np.array([r.std() for r in self.ratios])

    def to_dict(self, include_samples: bool = False) -> dict:
        d = {
            "schema_version": 1,
            "noise_amplitudes": list(self.noise_amplitudes),
            "samples_per_amplitude": self.samples_per_amplitude,
            "seed": self.seed,
            "reference_value": self.reference_value,
            "floor": self.floor,
            "mean_ratios": self.mean_ratios.tolist(),
            "std_ratios": self.std_ratios.tolist(),
        }
        if include_samples:
            d["ratios"] = [r.tolist() for r in self.ratios]
        return d


def robustness_scan(
    best_sequence: CoinSequence,
    amplitudes: Sequence[float],
    samples: int = 1000,
    seed: int = 0,
    floor: float = 1e-12,
    n_sites: int | None = None,
    chunk: int = 2000,
) -> RobustnessScan:
    """
    Perturb every theta by ``amplitude * eta`` with eta ~ N(0, 1), clamp back
    into [0, pi/2] and re-evaluate F. Amplitude k draws its noise from
    stream ``k`` of the seed.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    base = best_sequence.thetas
    xis, zetas = best_sequence.xis, best_sequence.zetas
    f0 = float(spread_objective_batch(best_sequence.coins()[None], n_sites)[0])
    ratios = []
    for k, amp in enumerate(amplitudes):
        amp = float(amp)
        if amp == 0.0:
            ratios.append(np.ones(samples))
            continue
        eta = restart_generator(seed, k).standard_normal((samples, base.size))
        thetas = np.clip(base + amp * eta, 0.0, HALF_PI)
        values = np.empty(samples)
        for s in range(0, samples, chunk):
            block = thetas[s : s + chunk]
            values[s : s + chunk] = spread_objective_batch(coin_batch(xis, block, zetas), n_sites)
        ratios.append((values + floor) / (f0 + floor))
    return RobustnessScan(
        noise_amplitudes=[float(a) for a in amplitudes],
        samples_per_amplitude=samples,
        ratios=ratios,
        seed=int(seed),
        reference_value=f0,
        floor=floor,
    )
