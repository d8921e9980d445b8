import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from coinwalk.cli import main, parse_amplitudes, parse_theta_source, CLIError


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_theta_sources(tmp_path):
    assert len(parse_theta_source("const:0.5", 4)) == 4
    np.testing.assert_allclose(parse_theta_source("list:0.1,0.2", None).thetas, [0.1, 0.2])
    assert len(parse_theta_source("heuristic", 9)) == 9
    # ten-digit rounding of pi/2 is snapped back into range
    assert parse_theta_source("const:1.5707963268", 1).thetas[0] == np.pi / 2
    (tmp_path / "seq.csv").write_text("t,theta\n2,0.3\n1,0.2\n")
    np.testing.assert_allclose(parse_theta_source(f"file:{tmp_path / 'seq.csv'}", 2).thetas, [0.2, 0.3])
    with pytest.raises(CLIError):
        parse_theta_source("const:0.5", None)
    with pytest.raises(CLIError):
        parse_theta_source("list:0.1,0.2", 3)
    with pytest.raises(CLIError):
        parse_theta_source("random", 3)
    with pytest.raises(ValueError):
        parse_theta_source("const:2.0", 1)


def test_amplitude_grid():
    assert parse_amplitudes("0:0.5:0.05") == [round(0.05 * i, 12) for i in range(11)]
    assert parse_amplitudes("0.1,0.2") == [0.1, 0.2]
    with pytest.raises(CLIError):
        parse_amplitudes("0:1:0")


def test_simulate_outputs(tmp_path, capsys):
    assert main(["simulate", "--theta", "const:0.7853981634", "--steps", "20", "--out", str(tmp_path)]) == 0
    rows = _read_csv(tmp_path / "report.csv")
    assert len(rows) == 21
    dist = _read_csv(tmp_path / "distributions.csv")
    assert list(dist[0]) == ["t", "x", "P", "P_L", "P_R"]
    last = [r for r in dist if r["t"] == "20"]
    assert sum(float(r["P"]) for r in last) == pytest.approx(1.0)
    # Hadamard walk from the symmetric state: two symmetric outer peaks
    p = {int(r["x"]): float(r["P"]) for r in last}
    assert all(p[x] == pytest.approx(p[-x]) for x in range(21))
    assert 10 <= abs(max(p, key=p.get)) <= 16
    assert json.loads((tmp_path / "report.json").read_text())["n_sites"] == 41
    assert "S(T)" in capsys.readouterr().out


def test_simulate_format_json_only(tmp_path):
    assert main(["simulate", "--theta", "list:0.4,0.5", "--format", "json", "--out", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["report.json"]


def test_optimize_then_reuse(tmp_path, capsys):
    opt = tmp_path / "opt"
    assert main(["optimize", "--steps", "5", "--restarts", "3", "--seed", "2", "--threads", "1", "--out", str(opt)]) == 0
    out = capsys.readouterr().out
    assert "best F =" in out and "wall time" in out
    run = json.loads((opt / "run.json").read_text())
    assert "wall_time" not in run
    seq_rows = _read_csv(opt / "best_sequence.csv")
    assert [r["t"] for r in seq_rows] == ["1", "2", "3", "4", "5"]

    sim = tmp_path / "sim"
    assert main(["simulate", "--theta", f"file:{opt / 'best_sequence.csv'}", "--steps", "5", "--out", str(sim)]) == 0
    assert main(["simulate", "--theta", f"file:{opt / 'run.json'}", "--out", str(tmp_path / "sim2")]) == 0
    assert (sim / "report.csv").read_bytes() == (tmp_path / "sim2" / "report.csv").read_bytes()

    rob = tmp_path / "rob"
    assert main(["robustness", "--input", str(opt / "run.json"), "--amplitudes", "0:0.2:0.1",
                 "--samples", "20", "--seed", "7", "--out", str(rob)]) == 0
    rows = _read_csv(rob / "robustness.csv")
    assert [float(r["amplitude"]) for r in rows] == [0.0, 0.1, 0.2]
    assert float(rows[0]["mean_ratio"]) == 1.0


def test_byte_reproducible(tmp_path):
    for name in ("a", "b"):
        assert main(["optimize", "--steps", "4", "--restarts", "3", "--seed", "11", "--out", str(tmp_path / name)]) == 0
    for f in ("run.json", "best_sequence.csv", "trace.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_optimize_modes(tmp_path):
    assert main(["optimize", "--mode", "stepwise", "--steps", "5", "--out", str(tmp_path / "s")]) == 0
    assert json.loads((tmp_path / "s" / "run.json").read_text())["mode"] == "stepwise"
    assert main(["optimize", "--mode", "final", "--steps", "3", "--restarts", "2", "--out", str(tmp_path / "f")]) == 0
    assert json.loads((tmp_path / "f" / "run.json").read_text())["mode"] == "final_step"
    assert main(["optimize", "--parameter-set", "full_su2", "--steps", "3", "--restarts", "2",
                 "--out", str(tmp_path / "su2")]) == 0
    assert "xi" in _read_csv(tmp_path / "su2" / "best_sequence.csv")[0]


def test_spectrum_outputs(tmp_path):
    assert main(["spectrum", "--theta", "const:1.5707963268", "--sites", "91", "--out", str(tmp_path)]) == 0
    eps = np.array([float(r["epsilon"]) for r in _read_csv(tmp_path / "spectrum.csv")])
    assert eps.size == 182
    assert np.all(np.minimum(np.abs(eps), np.pi - np.abs(eps)) < 1e-10)
    counts = [int(r["count"]) for r in _read_csv(tmp_path / "dos.csv")]
    assert sum(counts) == 182
    assert (tmp_path / "dispersion.csv").exists()
    data = json.loads((tmp_path / "spectrum.json").read_text())
    assert data["effective_mass"] is None  # infinite at pi/2


def test_spectrum_gap_evolution(tmp_path):
    assert main(["spectrum", "--theta", "list:0.3,0.6,0.9", "--gap-evolution", "--out", str(tmp_path)]) == 0
    assert len(_read_csv(tmp_path / "gap_evolution.csv")) == 3
    assert not (tmp_path / "dispersion.csv").exists()


def test_feasibility(tmp_path):
    assert main(["feasibility", "--steps", "3", "--resolution", "30", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "feasibility.json").read_text())["grid_resolution"] == 30


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"steps": 3, "resolution": 10, "out": str(tmp_path / "from_config")}))
    assert main(["feasibility", "--config", str(cfg), "--resolution", "12"]) == 0
    data = json.loads((tmp_path / "from_config" / "feasibility.json").read_text())
    assert data["grid_resolution"] == 12 and data["T"] == 3


@pytest.mark.parametrize(
    "argv",
    [
        ["feasibility", "--resolution", "1"],
        ["optimize", "--restarts", "3"],
        ["simulate", "--theta", "const:0.3"],
        ["robustness", "--input", "does-not-exist.json"],
        ["spectrum", "--theta", "const:0.3", "--sites", "10"],
    ],
)
def test_invalid_invocations_fail_cleanly(argv, tmp_path, capsys):
    assert main(argv + ["--out", str(tmp_path)]) != 0
    assert "error" in capsys.readouterr().err


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"steps": 4, "grid": 10}))
    assert main(["feasibility", "--config", str(cfg)]) == 2
    assert "grid" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "coinwalk", "feasibility", "--steps", "2", "--resolution", "5", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "residual floor" in proc.stdout
