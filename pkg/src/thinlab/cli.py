"""Command-line runner: `thinlab run config.json [--out DIR] [--jobs N]`.

Writes, per run: one JSON detail file per thickness, `aggregate.csv`
with one row per thickness, `summary.json` with the pass/fail checks,
and a PNG figure of the aggregate quantities.  Exit codes: 0 all checks
pass, 1 a threshold check failed (or a warning under --strict), 2 bad
config, 3 numerical failure inside a sub-run.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from .errors import ConfigError, ThinlabError
from .experiments import (
    AGGREGATE_COLUMNS,
    ExperimentConfig,
    ExperimentResult,
    load_config,
    run_experiment,
)

__all__ = ["main", "run", "write_artifacts"]


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def write_artifacts(cfg: ExperimentConfig, result: ExperimentResult,
                    out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    columns = AGGREGATE_COLUMNS[cfg.kind]
    agg = out_dir / "aggregate.csv"
    with open(agg, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(columns)
        for row in result.rows:
            wr.writerow([_fmt(row[c]) for c in columns])
    for row, detail in zip(result.rows, result.details):
        name = f"{cfg.kind}_sigma_{row['sigma']:g}.json"
        with open(out_dir / name, "w") as fh:
            json.dump(detail, fh, indent=2, sort_keys=True)
            fh.write("\n")
    with open(out_dir / "summary.json", "w") as fh:
        json.dump({"kind": cfg.kind, "passed": result.passed,
                   "checks": result.checks,
                   "warnings": list(result.warnings),
                   "summary": result.summary,
                   "config": cfg.raw}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _render_figure(cfg, result, out_dir / f"{cfg.kind}.png")
    return agg


def _render_figure(cfg: ExperimentConfig, result: ExperimentResult,
                   path: Path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    columns = [c for c in AGGREGATE_COLUMNS[cfg.kind]
               if c not in ("sigma", "slope")]
    sig = [row["sigma"] for row in result.rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    positive = True
    for c in columns:
        vals = [row[c] for row in result.rows]
        positive = positive and all(isinstance(v, float) and v > 0
                                    for v in vals)
        ax.plot(sig, vals, marker="o", label=c)
    ax.set_xscale("log")
    if positive:
        ax.set_yscale("log")
    ax.set_xlabel("profile thickness")
    ax.set_title(cfg.kind.replace("_", " "))
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def resolve_out_dir(cfg: ExperimentConfig, cli_out) -> Path:
    if cli_out:
        return Path(cli_out)
    env = os.environ.get("THINLAB_OUT")
    if env:
        return Path(env)
    if cfg.out:
        return Path(cfg.out)
    return Path("thinlab_runs") / cfg.kind


def run(config_path, out=None, jobs: int = 1, strict: bool = False) -> int:
    try:
        with open(config_path) as fh:
            frag = json.load(fh)
    except OSError as e:
        print(f"error: cannot read config: {e}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as e:
        print(f"error: config is not valid JSON: {e}", file=sys.stderr)
        return 2
    try:
        cfg = load_config(frag)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    try:
        result = run_experiment(cfg, jobs=jobs)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ThinlabError as e:
        print(f"numerical failure: {type(e).__name__}: {e}",
              file=sys.stderr)
        return 3
    out_dir = resolve_out_dir(cfg, out)
    agg = write_artifacts(cfg, result, out_dir)
    failed = [k for k, ok in result.checks.items() if not ok]
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if failed:
        print(f"FAIL {cfg.kind}: {', '.join(failed)} (see {agg})",
              file=sys.stderr)
        return 1
    if strict and result.warnings:
        print(f"FAIL {cfg.kind}: warnings escalated by --strict",
              file=sys.stderr)
        return 1
    print(f"ok {cfg.kind}: {len(result.rows)} sub-runs -> {agg}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="thinlab",
        description="Experiment families on thin crescent domains.")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="execute a JSON experiment config")
    runp.add_argument("config", help="path to the config file")
    runp.add_argument("--out", default=None,
                      help="output directory (overrides THINLAB_OUT and "
                           "the config)")
    runp.add_argument("--jobs", type=int, default=1,
                      help="concurrent sub-runs")
    runp.add_argument("--strict", action="store_true",
                      help="treat warnings as failures")
    args = parser.parse_args(argv)
    if args.command == "run":
        return run(args.config, out=args.out, jobs=args.jobs,
                   strict=args.strict)
    parser.error("unknown command")
    return 2


if __name__ == "__main__":
    sys.exit(main())
