"""Command-line surface: fit, simulate, benchmark, summarize.

Owns all file I/O and configuration parsing.  Exit codes: 0 success,
1 runtime failure, 2 input/validation failure.  Option precedence is
command line > config file > BTF_SEED (seed only) > built-in default.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import draws_io
from .draws_io import DrawsFormatError
from .model import (
    CountSeries,
    McmcStepError,
    ModelConfig,
    posterior_summary,
    run_mcmc,
    sample_quantile,
    equal_tail_interval,
)
from .rng import RngStream
from .simbench import (
    DESK_BUDGET,
    PAPER_BUDGET,
    McmcBudget,
    MetricRow,
    SimScenario,
    aggregate_rows,
    canonical_model_name,
    doppler_trend,
    run_experiment,
    simulate_counts,
)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_INPUT = 2

_ENV_SEED = "BTF_SEED"


class InputError(ValueError):
    """User-facing input or validation problem (exit code 2)."""


def _fmt(x) -> str:
    # fixed 6 significant digits for reals in CSV output
    return f"{x:.6g}"


# ---------------------------------------------------------------------------
# Option schema shared by argparse and the config file parser
# ---------------------------------------------------------------------------

def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in str(text).split(",") if part.strip() != ""]
    except ValueError as exc:
        raise InputError(f"expected a comma-separated integer list, got '{text}'") from exc


def _str_list(text: str) -> list[str]:
    return [part.strip() for part in str(text).split(",") if part.strip() != ""]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    val = str(text).strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise InputError(f"expected a boolean, got '{text}'")


# name -> (converter, default, help); None default means "resolved later"
_OPTIONS = {
    "fit": {
        "input": (str, None, "input CSV with columns time,count"),
        "output_dir": (str, ".", "directory for summary/draws/report files"),
        "prefix": (str, None, "output file prefix (default: input stem)"),
        "level": (float, 0.95, "credible/prediction interval level"),
        "iterations": (int, DESK_BUDGET.iterations, "MCMC iterations"),
        "burnin": (int, DESK_BUDGET.burnin, "burn-in iterations to discard"),
        "thin": (int, DESK_BUDGET.thin, "thinning stride"),
        "d": (int, 2, "differencing degree"),
        "sigma_tau": (float, 1.0, "half-Cauchy scale of the global shrinkage level"),
        "r_fixed": (int, None, "fix overdispersion at this value (Poisson mode)"),
        "mh_step": (int, 1, "integer random-walk half-width for r"),
        "seed": (int, 0, "master seed"),
        "csv_draws": (_bool, False, "also export draws as plain CSV"),
    },
    "simulate": {
        "T": (int, 200, "series length (>= 50)"),
        "r": (int, 10, "true overdispersion"),
        "seed": (int, 0, "simulation seed"),
        "output": (str, None, "output CSV path (time,count,true_mean)"),
    },
    "benchmark": {
        "T": (_int_list, [200], "series lengths, comma separated"),
        "r": (_int_list, [1, 10], "true overdispersion values, comma separated"),
        "reps": (int, 10, "replicates per scenario"),
        "models": (_str_list, ["nb", "gau", "loggau"], "models to fit"),
        "iterations": (int, DESK_BUDGET.iterations, "MCMC iterations"),
        "burnin": (int, DESK_BUDGET.burnin, "burn-in iterations"),
        "thin": (int, DESK_BUDGET.thin, "thinning stride"),
        "workers": (int, 1, "parallel worker processes"),
        "paper_budget": (_bool, False, "use the full-scale budget (105000/100000, 100 reps)"),
        "output_dir": (str, ".", "directory for raw/aggregated CSVs"),
        "seed": (int, 0, "master seed"),
    },
    "summarize": {
        "draws": (str, None, "draws file written by fit"),
        "level": (float, 0.95, "credible/prediction interval level"),
        "output": (str, None, "summary CSV path (default: alongside draws)"),
    },
}


def _apply_config_file(command: str, path: str, values: dict) -> None:
    parser = configparser.ConfigParser()
    parser.optionxform = str  # option names are case-sensitive (e.g. T)
    read = parser.read(path)
    if not read:
        raise InputError(f"cannot read config file: {path}")
    if not parser.has_section(command):
        return
    schema = _OPTIONS[command]
    for key, raw in parser.items(command):
        if key not in schema:
            raise InputError(f"unknown key '{key}' in [{command}] of {path}")
        conv = schema[key][0]
        try:
            values[key] = conv(raw)
        except InputError:
            raise
        except ValueError as exc:
            raise InputError(f"bad value for '{key}' in {path}: {raw}") from exc


def _resolve_options(command: str, args: argparse.Namespace) -> dict:
    schema = _OPTIONS[command]
    values = {k: spec[1] for k, spec in schema.items()}
    if "seed" in values and os.environ.get(_ENV_SEED):
        try:
            values["seed"] = int(os.environ[_ENV_SEED])
        except ValueError as exc:
            raise InputError(f"{_ENV_SEED} must be an integer") from exc
    if getattr(args, "config", None):
        _apply_config_file(command, args.config, values)
    for key in schema:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            values[key] = flag_val
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nbbtf",
        description="Locally adaptive Bayesian trend filtering for count time series",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, schema in _OPTIONS.items():
        p = sub.add_parser(command)
        p.add_argument("--config", help="INI config file with a [%s] section" % command)
        for key, (conv, _default, help_text) in schema.items():
            flag = "--" + key.replace("_", "-")
            if conv is _bool:
                p.add_argument(flag, action="store_const", const=True, default=None,
                               dest=key, help=help_text)
            else:
                p.add_argument(flag, type=conv, default=None, dest=key, help=help_text)
    return parser


# ---------------------------------------------------------------------------
# CSV and report I/O
# ---------------------------------------------------------------------------

def read_count_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read (time, count) columns; extra columns are ignored."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"input file not found: {path}")
    labels, counts = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        cols = [c.strip().lower() for c in header]
        if len(cols) < 2 or cols[0] != "time" or cols[1] != "count":
            raise InputError(f"{path}: header must start with 'time,count'")
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise InputError(f"{path}: row {line_no} has fewer than 2 columns")
            raw = row[1].strip()
            try:
                value = int(raw)
            except ValueError:
                raise InputError(
                    f"{path}: row {line_no}: count '{raw}' is not an integer"
                ) from None
            if value < 0:
                raise InputError(f"{path}: row {line_no}: count {value} is negative")
            labels.append(row[0].strip())
            counts.append(value)
    if not counts:
        raise InputError(f"{path}: no data rows")
    return np.array(labels), np.array(counts, dtype=np.int64)


def write_summary_csv(path, labels, y, summary, D: int) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "time", "y", "trend_median", "ci_lo", "ci_hi",
            "pred_lo", "pred_hi", "kappa_median", "unshrunk_flag",
        ])
        T = len(y)
        for t in range(T):
            # kappa belongs to the increment at t, defined for t >= D
            if t >= D:
                kappa = _fmt(summary.kappa_median[t - D])
                flag = str(int(summary.kappa_median[t - D] < 0.5))
            else:
                kappa = ""
                flag = ""
            writer.writerow([
                labels[t], int(y[t]),
                _fmt(summary.trend_median[t]),
                _fmt(summary.ci_lower[t]), _fmt(summary.ci_upper[t]),
                int(summary.pred_lower[t]), int(summary.pred_upper[t]),
                kappa, flag,
            ])


def _write_draws_csv(path, draws) -> None:
    T = draws.theta.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["draw", "r", "phi", "mu"] + [f"theta_{t + 1}" for t in range(T)])
        for k in range(draws.n_draws):
            writer.writerow(
                [k + 1, int(draws.r[k]), _fmt(draws.phi[k]), _fmt(draws.mu[k])]
                + [_fmt(v) for v in draws.theta[k]]
            )


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_fit(opts: dict) -> int:
    if not opts.get("input"):
        raise InputError("fit requires --input")
    labels, y = read_count_csv(opts["input"])
    if not 0.0 < opts["level"] < 1.0:
        raise InputError("level must lie in (0, 1)")
    try:
        cfg = ModelConfig(
            D=opts["d"], sigma_tau=opts["sigma_tau"], r_fixed=opts["r_fixed"],
            mh_step=opts["mh_step"], iterations=opts["iterations"],
            burnin=opts["burnin"], thin=opts["thin"], seed=opts["seed"],
        )
        series = CountSeries(y, labels=labels)
        if len(series) < cfg.D + 2:
            raise InputError(f"need at least {cfg.D + 2} observations for D={cfg.D}")
    except InputError:
        raise
    except ValueError as exc:
        raise InputError(str(exc)) from exc

    draws = run_mcmc(series, cfg, RngStream(cfg.seed))
    summary = posterior_summary(draws, opts["level"])

    out_dir = Path(opts["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    prefix = opts["prefix"] or Path(opts["input"]).stem
    summary_path = out_dir / f"{prefix}_summary.csv"
    draws_path = out_dir / f"{prefix}_draws.npz"
    report_path = out_dir / f"{prefix}_report.json"

    config_echo = {
        "D": cfg.D, "sigma_tau": cfg.sigma_tau, "r_fixed": cfg.r_fixed,
        "r_prior_mean": cfg.r_prior_mean, "mh_step": cfg.mh_step,
        "init_var": cfg.init_var, "iterations": cfg.iterations,
        "burnin": cfg.burnin, "thin": cfg.thin, "seed": cfg.seed,
        "level": opts["level"],
    }
    write_summary_csv(summary_path, labels, y, summary, cfg.D)
    draws_io.save_draws(draws_path, draws, config_echo, y, labels)
    if opts["csv_draws"]:
        _write_draws_csv(out_dir / f"{prefix}_draws.csv", draws)

    r_lo, r_hi = equal_tail_interval(draws.r, opts["level"])
    report = {
        "r_median": int(sample_quantile(draws.r, 0.5)),
        "r_ci": [int(r_lo), int(r_hi)],
        "phi_median": float(sample_quantile(draws.phi, 0.5)),
        "mu_median": float(sample_quantile(draws.mu, 0.5)),
        "accept_rate": None if np.isnan(draws.accept_rate) else float(draws.accept_rate),
        "unshrunk_count": summary.unshrunk_count,
        "unshrunk_fraction": summary.unshrunk_fraction,
        "seconds": draws.seconds,
        "n_draws": draws.n_draws,
        "config": config_echo,
    }
    report_path.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {summary_path}, {draws_path}, {report_path}")
    return EXIT_OK


def cmd_simulate(opts: dict) -> int:
    if not opts.get("output"):
        raise InputError("simulate requires --output")
    try:
        scenario = SimScenario(T=opts["T"], r_true=opts["r"])
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    mean = doppler_trend(scenario.T)
    series = simulate_counts(mean, scenario.r_true, RngStream(opts["seed"]))
    out = Path(opts["output"])
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "count", "true_mean"])
        for t in range(scenario.T):
            writer.writerow([t + 1, int(series.y[t]), _fmt(mean[t])])
    print(f"wrote {out}")
    return EXIT_OK


def cmd_benchmark(opts: dict) -> int:
    reps = opts["reps"]
    budget = McmcBudget(opts["iterations"], opts["burnin"], opts["thin"])
    if opts["paper_budget"]:
        budget = PAPER_BUDGET
        reps = 100
    try:
        models = [canonical_model_name(m) for m in opts["models"]]
        scenarios = [SimScenario(T=t, r_true=r) for t in opts["T"] for r in opts["r"]]
        if reps < 1:
            raise ValueError("reps must be >= 1")
    except ValueError as exc:
        raise InputError(str(exc)) from exc

    rows = run_experiment(
        scenarios, models, reps=reps, budget=budget,
        workers=opts["workers"], master_seed=opts["seed"],
    )
    out_dir = Path(opts["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    raw_path = out_dir / "benchmark_raw.csv"
    agg_path = out_dir / "benchmark_agg.csv"

    fields = MetricRow.csv_fields()
    with open(raw_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in rows:
            writer.writerow([getattr(row, f) for f in fields])
    agg = aggregate_rows(rows)
    with open(agg_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if agg:
            writer.writerow(list(agg[0].keys()))
            for rec in agg:
                writer.writerow(list(rec.values()))
    n_failed = sum(1 for r in rows if r.error)
    print(f"wrote {raw_path} ({len(rows)} rows, {n_failed} failed) and {agg_path}")
    return EXIT_RUNTIME if rows and n_failed == len(rows) else EXIT_OK


def cmd_summarize(opts: dict) -> int:
    if not opts.get("draws"):
        raise InputError("summarize requires --draws")
    if not 0.0 < opts["level"] < 1.0:
        raise InputError("level must lie in (0, 1)")
    try:
        draws, header, y, labels = draws_io.load_draws(opts["draws"])
    except DrawsFormatError as exc:
        raise InputError(str(exc)) from exc
    summary = posterior_summary(draws, opts["level"])
    d_degree = int(header["config"].get("D", 2))
    out = Path(opts["output"]) if opts.get("output") else (
        Path(opts["draws"]).with_name(Path(opts["draws"]).stem + f"_summary_{opts['level']:g}.csv")
    )
    out.parent.mkdir(parents=True, exist_ok=True)
    write_summary_csv(out, labels, y, summary, d_degree)
    print(f"wrote {out}")
    return EXIT_OK


_COMMANDS = {
    "fit": cmd_fit,
    "simulate": cmd_simulate,
    "benchmark": cmd_benchmark,
    "summarize": cmd_summarize,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags, which matches the validation code
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        opts = _resolve_options(args.command, args)
        return _COMMANDS[args.command](opts)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except McmcStepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # never panics to the shell
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def console_entry() -> None:  # pragma: no cover - thin wrapper
    sys.exit(main())
