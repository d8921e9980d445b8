"""
Command-line front end.

Each subcommand writes CSV and JSON files into ``--out`` and prints a short
summary on stdout. Errors go to stderr with exit code 2.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np
from pydantic import ValidationError

from . import __version__
from .config import build_config, load_config_file
from .io import csv_text, dumps, write_text
from .metrics import simulate_report
from .optimize import (
    OptimizationRun,
    SearchSettings,
    heuristic_seed,
    minimize_final_step,
    minimize_global,
    minimize_stepwise,
    robustness_scan,
)
from .reference import verify_t4_incompatibility
from .spectral import (
    dispersion_constant_coin,
    effective_mass,
    gap_evolution,
    group_velocity,
    quasi_energies,
    sequence_hash,
    total_operator,
)
from .walk import HALF_PI, CoinSequence

# angles printed to ~10 digits can overshoot [0, pi/2] by rounding
SNAP = 1e-9


class CLIError(Exception):
    pass


def _snap(theta: float) -> float:
    if -SNAP <= theta < 0.0:
        return 0.0
    if HALF_PI < theta <= HALF_PI + SNAP:
        return HALF_PI
    return theta


def load_sequence(path: str | Path) -> CoinSequence:
    """Read a sequence from a run JSON, a ``{"thetas": [...]}`` JSON, or a (t, theta) CSV."""
    path = Path(path)
    if not path.exists():
        raise CLIError(f"sequence file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        data = json.loads(text)
        if "best_sequence" in data:
            return OptimizationRun.from_dict(data).best_sequence
        if "thetas" in data:
            thetas = [_snap(float(t)) for t in data["thetas"]]
            if "xis" in data:
                return CoinSequence.from_angles(data["xis"], thetas, data["zetas"])
            return CoinSequence.from_thetas(thetas)
        raise CLIError(f"{path}: no sequence found")
    rows = list(csv.DictReader(text.splitlines()))
    if not rows or "theta" not in rows[0]:
        raise CLIError(f"{path}: expected a CSV with a 'theta' column")
    rows.sort(key=lambda r: int(r.get("t", 0)))
    thetas = [_snap(float(r["theta"])) for r in rows]
    if "xi" in rows[0]:
        return CoinSequence.from_angles(
            [float(r["xi"]) for r in rows], thetas, [float(r["zeta"]) for r in rows]
        )
    return CoinSequence.from_thetas(thetas)


def parse_theta_source(source: str, steps: int | None) -> CoinSequence:
    """``const:V`` | ``list:a,b,...`` | ``file:PATH`` | ``heuristic``."""
    kind, _, arg = source.partition(":")
    kind = kind.strip().lower()
    if kind == "const":
        if steps is None:
            raise CLIError("--theta const:V needs --steps")
        seq = CoinSequence.from_thetas([_snap(float(arg))] * steps)
    elif kind == "list":
        seq = CoinSequence.from_thetas([_snap(float(v)) for v in arg.split(",") if v.strip()])
    elif kind == "file":
        seq = load_sequence(arg)
    elif kind == "heuristic":
        if steps is None:
            raise CLIError("--theta heuristic needs --steps")
        seq = heuristic_seed(steps, float(arg) if arg else 8.0)
    else:
        raise CLIError(f"unknown theta source {source!r}")
    if steps is not None and len(seq) != steps:
        raise CLIError(f"theta source has {len(seq)} steps but --steps is {steps}")
    return seq


def parse_amplitudes(spec: str) -> list[float]:
    """``start:stop:step`` (stop inclusive) or a comma-separated list."""
    if ":" in spec:
        start, stop, step = (float(v) for v in spec.split(":"))
        if step <= 0:
            raise CLIError("amplitude step must be positive")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(n)]
    return [float(v) for v in spec.split(",") if v.strip()]


def _sequence_csv(seq: CoinSequence) -> str:
    if seq.theta_only:
        return csv_text(["t", "theta"], [(t, th) for t, th in enumerate(seq.thetas, start=1)])
    return csv_text(
        ["t", "theta", "xi", "zeta"],
        [(t, th, xi, ze) for t, (th, xi, ze) in enumerate(zip(seq.thetas, seq.xis, seq.zetas), start=1)],
    )


def cmd_simulate(cfg) -> int:
    seq = parse_theta_source(cfg.theta, cfg.steps)
    traj, report = simulate_report(seq, cfg.sites)
    out = Path(cfg.out)
    if cfg.format in ("csv", "both"):
        write_text(out / "report.csv", report.to_csv())
        rows = []
        for t, state in enumerate(traj):
            prob = np.abs(state.field) ** 2
            for x, (pr, pl) in zip(state.positions, prob):
                rows.append((t, int(x), pr + pl, pl, pr))
        write_text(out / "distributions.csv", csv_text(["t", "x", "P", "P_L", "P_R"], rows))
    if cfg.format in ("json", "both"):
        write_text(out / "report.json", report.to_json())
    last = report.records[-1]
    print(f"T = {len(seq)}  S(T) = {last.entropy:.6f}  log(T+1) = {last.max_entropy:.6f}  var = {last.variance:.6f}")
    return 0


def cmd_optimize(cfg) -> int:
    settings = SearchSettings(method=cfg.method, max_iter=cfg.max_iter)
    threads = cfg.threads or os.cpu_count() or 1
    if cfg.mode == "global":
        run = minimize_global(
            cfg.steps, cfg.parameter_set, cfg.restarts, cfg.seed, settings, cfg.sites, threads,
            heuristic_start=cfg.heuristic_start,
        )
    elif cfg.mode == "final_step":
        run = minimize_final_step(
            cfg.steps, cfg.restarts, cfg.seed, cfg.parameter_set, settings, cfg.sites, threads
        )
    else:
        if cfg.parameter_set != "theta_only":
            raise CLIError("stepwise mode supports only the theta_only parameter set")
        run = minimize_stepwise(cfg.steps, cfg.seed, n_sites=cfg.sites)
    out = Path(cfg.out)
    write_text(out / "run.json", dumps(run.to_dict(include_timing=False)))
    write_text(out / "best_sequence.csv", _sequence_csv(run.best_sequence))
    write_text(
        out / "trace.csv", csv_text(["t", "value"], [(t, v) for t, v in enumerate(run.trace, start=1)])
    )
    label = "F'" if cfg.mode == "final_step" else "F"
    print(f"best {label} = {run.best_value:.6e}")
    print(f"wall time = {run.wall_time:.2f} s")
    return 0


def cmd_spectrum(cfg) -> int:
    steps = cfg.steps
    if steps is None and cfg.theta.strip().lower().startswith("const"):
        steps = 1
    seq = parse_theta_source(cfg.theta, steps)
    n = cfg.sites if cfg.sites is not None else 2 * len(seq) + 1
    if n % 2 == 0:
        raise CLIError("--sites must be odd")
    report = quasi_energies(total_operator(seq, n), bins=cfg.bins, n_sites=n, seq_hash=sequence_hash(seq))
    out = Path(cfg.out)
    extras = {}
    thetas = seq.thetas
    if seq.theta_only and np.all(thetas == thetas[0]):
        disp = dispersion_constant_coin(float(thetas[0]), n)
        vp, vm = group_velocity(disp, "plus"), group_velocity(disp, "minus")
        write_text(
            out / "dispersion.csv",
            csv_text(
                ["k", "eps_plus", "eps_minus", "vg_plus", "vg_minus"],
                zip(disp["k"], disp["plus"], disp["minus"], vp, vm),
            ),
        )
        extras["effective_mass"] = effective_mass(float(thetas[0]))
    if cfg.gap_evolution:
        gaps = gap_evolution(seq, n)
        write_text(out / "gap_evolution.csv", csv_text(["t", "gap"], gaps))
        extras["gap_evolution"] = [g for _, g in gaps]
    report.extras.update(extras)
    write_text(out / "spectrum.csv", csv_text(["n", "epsilon"], enumerate(report.quasi_energies)))
    write_text(out / "dos.csv", csv_text(["bin_center", "count"], zip(report.dos_centers, report.dos_counts.tolist())))
    write_text(out / "spectrum.json", dumps(report.to_dict()))
    print(f"N = {n}  gap = {report.gap:.12g}  max | |lambda| - 1 | = {report.max_modulus_error:.2e}")
    return 0


def cmd_robustness(cfg) -> int:
    seq = load_sequence(cfg.input)
    amps = parse_amplitudes(cfg.amplitudes)
    scan = robustness_scan(seq, amps, cfg.samples, cfg.seed)
    out = Path(cfg.out)
    write_text(
        out / "robustness.csv",
        csv_text(["amplitude", "mean_ratio", "std_ratio"], zip(amps, scan.mean_ratios, scan.std_ratios)),
    )
    write_text(out / "robustness.json", dumps(scan.to_dict()))
    for a, m in zip(amps, scan.mean_ratios):
        print(f"{a:8.4f}  {m:.6f}")
    return 0


def cmd_feasibility(cfg) -> int:
    res = verify_t4_incompatibility(cfg.resolution, T=cfg.steps)
    write_text(Path(cfg.out) / "feasibility.json", dumps(res.to_dict()))
    print(f"T = {res.T}  resolution = {res.grid_resolution}  residual floor = {res.residual:.6e}")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "optimize": cmd_optimize,
    "spectrum": cmd_spectrum,
    "robustness": cmd_robustness,
    "feasibility": cmd_feasibility,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coinwalk", description="Spread-optimal coin sequences for 1D discrete-time quantum walks."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--out", help="output directory (default: out)")

    p = sub.add_parser("simulate", help="evolve a walk and write per-step diagnostics")
    common(p)
    p.add_argument("--theta", help="const:V | list:a,b,.. | file:PATH | heuristic")
    p.add_argument("--steps", type=int)
    p.add_argument("--sites", type=int)
    p.add_argument("--format", choices=["csv", "json", "both"])

    p = sub.add_parser("optimize", help="search for spread-optimal sequences")
    common(p)
    p.add_argument("--mode", choices=["global", "stepwise", "final", "final_step"])
    p.add_argument("--parameter-set", dest="parameter_set", choices=["theta_only", "full_su2"])
    p.add_argument("--steps", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--method", choices=["gd", "cg", "lbfgsb"])
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--heuristic-start", dest="heuristic_start", action="store_true", default=None)
    p.add_argument("--sites", type=int)

    p = sub.add_parser("spectrum", help="quasi-energy spectrum of the total evolution operator")
    common(p)
    p.add_argument("--theta")
    p.add_argument("--steps", type=int)
    p.add_argument("--sites", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--gap-evolution", dest="gap_evolution", action="store_true", default=None)

    p = sub.add_parser("robustness", help="sensitivity of F to angle noise")
    common(p)
    p.add_argument("--input", help="run JSON or best-sequence CSV")
    p.add_argument("--amplitudes", help="start:stop:step or a,b,c")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("feasibility", help="grid search for a walk uniform at every step")
    common(p)
    p.add_argument("--steps", type=int)
    p.add_argument("--resolution", type=int)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        cfg = build_config(args.command, load_config_file(args.config), flags)
        return COMMANDS[args.command](cfg)
    except ValidationError as exc:
        print(f"error: invalid configuration\n{exc}", file=sys.stderr)
    except (CLIError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
