import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from nbbtf import PAPER_BUDGET
from nbbtf.cli import main
from nbbtf.draws_io import load_draws

FIT_FAST = ["--iterations", "600", "--burnin", "400", "--thin", "2"]


def run_cli(*args):
    return main(list(args))


@pytest.fixture()
def sim_csv(tmp_path):
    path = tmp_path / "sim.csv"
    assert run_cli("simulate", "--T", "60", "--r", "10", "--seed", "3",
                   "--output", str(path)) == 0
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def test_simulate_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert run_cli("simulate", "--T", "200", "--r", "10", "--seed", "1",
                       "--output", str(out)) == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_rejects_tiny_length(tmp_path):
    assert run_cli("simulate", "--T", "10", "--output", str(tmp_path / "x.csv")) == 2


def test_simulate_true_mean_in_range(sim_csv):
    rows = read_rows(sim_csv)
    assert rows[0] == ["time", "count", "true_mean"]
    means = np.array([float(r[2]) for r in rows[1:]])
    assert np.all((means >= 1.0) & (means <= 10.0))
    counts = [int(r[1]) for r in rows[1:]]
    assert all(c >= 0 for c in counts)


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

def test_fit_roundtrip_from_simulate(sim_csv, tmp_path):
    out = tmp_path / "out"
    code = run_cli("fit", "--input", str(sim_csv), "--output-dir", str(out),
                   "--seed", "2", *FIT_FAST)
    assert code == 0
    summary = read_rows(out / "sim_summary.csv")
    assert summary[0] == ["time", "y", "trend_median", "ci_lo", "ci_hi",
                          "pred_lo", "pred_hi", "kappa_median", "unshrunk_flag"]
    assert len(summary) == 61
    for row in summary[1:]:
        assert int(row[5]) >= 0 and int(row[6]) >= int(row[5])
        assert float(row[3]) >= 0.0  # count-scale credible bounds are nonnegative
    # kappa is undefined for the first D time points
    assert summary[1][7] == "" and summary[2][7] == "" and summary[3][7] != ""

    report = json.loads((out / "sim_report.json").read_text())
    for key in ("r_median", "r_ci", "phi_median", "mu_median", "accept_rate",
                "unshrunk_fraction", "seconds", "config"):
        assert key in report
    k = sum(1 for row in summary[1:] if row[8] == "1")
    assert report["unshrunk_fraction"] == pytest.approx(k / (60 - 2))
    assert report["unshrunk_count"] == k
    assert 0.0 <= report["accept_rate"] <= 1.0

    draws, header, y, labels = load_draws(out / "sim_draws.npz")
    assert draws.n_draws == 100
    assert header["config"]["iterations"] == 600


def test_fit_r_fixed_mode(sim_csv, tmp_path):
    out = tmp_path / "out"
    code = run_cli("fit", "--input", str(sim_csv), "--output-dir", str(out),
                   "--r-fixed", "1000", *FIT_FAST)
    assert code == 0
    report = json.loads((out / "sim_report.json").read_text())
    assert report["r_median"] == 1000
    assert report["r_ci"] == [1000, 1000]
    assert report["accept_rate"] is None
    assert report["config"]["r_fixed"] == 1000


def test_fit_rejects_fractional_count(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("time,count\n1,3\n2,3.5\n3,4\n")
    code = run_cli("fit", "--input", str(bad), "--output-dir", str(tmp_path))
    assert code == 2


def test_fit_reports_offending_row(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("time,count\n1,3\n2,3.5\n")
    run_cli("fit", "--input", str(bad), "--output-dir", str(tmp_path))
    err = capsys.readouterr().err
    assert "row 3" in err and "3.5" in err


def test_fit_rejects_negative_count(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("time,count\n1,3\n2,-1\n")
    assert run_cli("fit", "--input", str(bad), "--output-dir", str(tmp_path)) == 2


def test_fit_rejects_bad_header_and_missing_file(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("week,n\n1,3\n")
    assert run_cli("fit", "--input", str(bad)) == 2
    assert run_cli("fit", "--input", str(tmp_path / "nope.csv")) == 2
    assert run_cli("fit") == 2  # --input required


def test_fit_rejects_bad_level(sim_csv, tmp_path):
    assert run_cli("fit", "--input", str(sim_csv), "--output-dir", str(tmp_path),
                   "--level", "1.5", *FIT_FAST) == 2


def test_fit_csv_draws_export(sim_csv, tmp_path):
    out = tmp_path / "out"
    assert run_cli("fit", "--input", str(sim_csv), "--output-dir", str(out),
                   "--csv-draws", *FIT_FAST) == 0
    rows = read_rows(out / "sim_draws.csv")
    assert rows[0][:4] == ["draw", "r", "phi", "mu"]
    assert len(rows) == 101


# ---------------------------------------------------------------------------
# summarize
# ---------------------------------------------------------------------------

def test_summarize_idempotent_at_fit_level(sim_csv, tmp_path):
    out = tmp_path / "out"
    run_cli("fit", "--input", str(sim_csv), "--output-dir", str(out), *FIT_FAST)
    redo = tmp_path / "redo.csv"
    assert run_cli("summarize", "--draws", str(out / "sim_draws.npz"),
                   "--level", "0.95", "--output", str(redo)) == 0
    assert redo.read_bytes() == (out / "sim_summary.csv").read_bytes()


def test_summarize_other_level_uses_order_statistics(sim_csv, tmp_path):
    out = tmp_path / "out"
    run_cli("fit", "--input", str(sim_csv), "--output-dir", str(out), *FIT_FAST)
    redo = tmp_path / "redo.csv"
    assert run_cli("summarize", "--draws", str(out / "sim_draws.npz"),
                   "--level", "0.90", "--output", str(redo)) == 0
    draws, _, _, _ = load_draws(out / "sim_draws.npz")
    trend = np.exp(draws.theta)
    rows = read_rows(redo)
    lo = np.quantile(trend, 0.05, axis=0, method="inverted_cdf")
    for t, row in enumerate(rows[1:]):
        assert float(row[3]) == pytest.approx(lo[t], rel=1e-5)


def test_summarize_rejects_bad_inputs(tmp_path):
    assert run_cli("summarize", "--draws", str(tmp_path / "missing.npz")) == 2
    junk = tmp_path / "junk.npz"
    junk.write_bytes(b"not a numpy archive")
    assert run_cli("summarize", "--draws", str(junk)) == 2
    np.savez(tmp_path / "alien.npz", foo=np.arange(3))
    assert run_cli("summarize", "--draws", str(tmp_path / "alien.npz")) == 2
    assert run_cli("summarize", "--draws", str(junk), "--level", "1.5") == 2


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------

def test_benchmark_tiny_sweep(tmp_path):
    out = tmp_path / "bench"
    code = run_cli("benchmark", "--T", "60", "--r", "10", "--reps", "2",
                   "--models", "nb,exp", "--iterations", "400", "--burnin", "200",
                   "--thin", "4", "--output-dir", str(out), "--seed", "5")
    assert code == 0
    raw = read_rows(out / "benchmark_raw.csv")
    assert len(raw) == 5  # header + 1 scenario x 2 models x 2 reps
    assert raw[0][:4] == ["model", "T", "r_true", "replicate"]
    agg = read_rows(out / "benchmark_agg.csv")
    assert len(agg) == 3  # header + one cell per (T, r, model)


def test_benchmark_paper_budget_flag(tmp_path, monkeypatch):
    captured = {}

    def fake_run_experiment(scenarios, models, reps, budget, workers, master_seed):
        captured.update(reps=reps, budget=budget)
        return []

    import nbbtf.cli as cli_mod
    monkeypatch.setattr(cli_mod, "run_experiment", fake_run_experiment)
    assert run_cli("benchmark", "--paper-budget", "--output-dir", str(tmp_path)) == 0
    assert captured["budget"] == PAPER_BUDGET
    assert captured["budget"].iterations == 105_000
    assert captured["budget"].burnin == 100_000
    assert captured["reps"] == 100


def test_benchmark_rejects_unknown_model(tmp_path):
    assert run_cli("benchmark", "--models", "arima", "--output-dir", str(tmp_path)) == 2


# ---------------------------------------------------------------------------
# configuration precedence
# ---------------------------------------------------------------------------

def test_env_seed_is_used_and_flag_wins(tmp_path, monkeypatch):
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    monkeypatch.setenv("BTF_SEED", "77")
    run_cli("simulate", "--T", "60", "--r", "10", "--output", str(a))
    monkeypatch.delenv("BTF_SEED")
    run_cli("simulate", "--T", "60", "--r", "10", "--seed", "77", "--output", str(b))
    assert a.read_bytes() == b.read_bytes()
    monkeypatch.setenv("BTF_SEED", "77")
    run_cli("simulate", "--T", "60", "--r", "10", "--seed", "5", "--output", str(c))
    assert c.read_bytes() != a.read_bytes()


def test_config_file_unknown_key_is_hard_error(tmp_path, sim_csv):
    cfg = tmp_path / "btf.ini"
    cfg.write_text("[fit]\nbogus_knob = 3\n")
    assert run_cli("fit", "--config", str(cfg), "--input", str(sim_csv)) == 2


def test_config_file_values_and_cli_precedence(tmp_path):
    cfg = tmp_path / "btf.ini"
    cfg.write_text("[simulate]\nseed = 9\nT = 60\nr = 10\n")
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    run_cli("simulate", "--config", str(cfg), "--output", str(a))
    run_cli("simulate", "--T", "60", "--r", "10", "--seed", "9", "--output", str(b))
    assert a.read_bytes() == b.read_bytes()
    # command line overrides the file
    run_cli("simulate", "--config", str(cfg), "--seed", "4", "--output", str(c))
    assert c.read_bytes() != a.read_bytes()


def test_config_file_missing(tmp_path):
    assert run_cli("simulate", "--config", str(tmp_path / "none.ini"),
                   "--output", str(tmp_path / "x.csv")) == 2


def test_unknown_flag_exits_two(tmp_path):
    assert run_cli("simulate", "--nope", "1") == 2


# ---------------------------------------------------------------------------
# module entry point
# ---------------------------------------------------------------------------

def test_python_dash_m_smoke(tmp_path):
    out = tmp_path / "m.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "nbbtf", "simulate", "--T", "60", "--r", "1",
         "--output", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
