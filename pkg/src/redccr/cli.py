"""Command-line runner: one subcommand per check, plus ``suite``.

Exit codes: 0 all tolerances met, 1 a tolerance failed, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import experiments as X
from .config import ExperimentConfig, default_config_text, load_config
from .exceptions import ConfigError

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# two-column data files for external plotting: (table, x column, y column, file stem)
PLOT_SERIES = {
    "theorem1": [("convergence", "N", "abs_error", "convergence_error")],
    "poisson": [("tv", "N", "tv_distance", "tv_distance")],
    "radiation": [("sweep", "k_min", "n_fock", "n_fock"), ("sweep", "k_min", "n_red", "n_red")],
    "fields": [("field_scan", "t", "re_01", "field_re_01")],
}


def _clean(value):
    """JSON-safe copy: NaN and inf become null, numpy scalars become Python ones."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_clean(payload), indent=2, sort_keys=True, allow_nan=False) + "\n")


def write_csv(path: Path, rows: Sequence[dict]) -> None:
    columns: list = []
    for row in rows:
        columns.extend(k for k in row if k not in columns)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        for row in rows:
            w.writerow({k: _clean(v) for k, v in row.items()})


def write_series(path: Path, rows: Sequence[dict], x: str, y: str) -> None:
    with path.open("w") as fh:
        fh.write(f"# {x} {y}\n")
        for row in rows:
            fh.write(f"{row[x]!r} {row[y]!r}\n")


def write_artifacts(result: X.CheckResult, cfg: ExperimentConfig, out_dir: Path) -> list[str]:
    d = out_dir / result.name
    d.mkdir(parents=True, exist_ok=True)
    written = []
    for name, rows in sorted(result.tables.items()):
        write_csv(d / f"{name}.csv", rows)
        written.append(f"{name}.csv")
    for table, x, y, stem in PLOT_SERIES.get(result.name, []):
        rows = result.tables.get(table)
        if rows:
            write_series(d / f"{stem}.dat", rows, x, y)
            written.append(f"{stem}.dat")
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "check": result.name,
        "status": result.status,
        "seed": cfg.seed,
        "parameters": cfg.section(result.name).as_dict(),
        "metrics": result.metrics,
        "tolerances": result.tolerances,
        "failures": result.failures,
        "skipped": result.skipped,
        "notes": result.notes,
        "artifacts": sorted(written),
    }
    write_json(d / "manifest.json", manifest)
    return written


def run_check(name: str, cfg: ExperimentConfig, out_dir: Path, quiet: bool = False) -> X.CheckResult:
    t0 = time.perf_counter()
    result = X.CHECKS[name](cfg.section(name), X.check_rng(cfg.seed, name))
    write_artifacts(result, cfg, out_dir)
    if not quiet:
        elapsed = time.perf_counter() - t0
        print(f"{name}: {result.status.upper()} ({elapsed:.1f} s)")
        for msg in result.failures:
            print(f"  FAIL {msg}")
        for msg in result.skipped:
            print(f"  SKIP {msg}")
    return result


def run_suite(cfg: ExperimentConfig, out_dir: Path, quiet: bool = False) -> int:
    statuses, failures, skipped = {}, [], []
    for name in X.CHECKS:
        try:
            result = run_check(name, cfg, out_dir, quiet)
        except ConfigError:
            raise
        except Exception as exc:  # a crashing check is a failed check, not a crashed suite
            statuses[name] = X.FAIL
            failures.append({"check": name, "failure": f"error: {type(exc).__name__}: {exc}"})
            if not quiet:
                print(f"{name}: ERROR {type(exc).__name__}: {exc}")
            continue
        statuses[name] = result.status
        failures.extend({"check": name, "failure": f} for f in result.failures)
        skipped.extend({"check": name, "reason": s} for s in result.skipped)
    status = X.FAIL if failures else X.PASS
    write_json(out_dir / "suite.json", {
        "schema_version": SCHEMA_VERSION,
        "status": status,
        "seed": cfg.seed,
        "checks": statuses,
        "failures": failures,
        "skipped": skipped,
    })
    if not quiet:
        print(f"suite: {status.upper()} ({sum(s == X.PASS for s in statuses.values())}/{len(statuses)} checks)")
    return EXIT_OK if status == X.PASS else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="redccr", description="Reducible-CCR numerical experiments.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="key-value config file (INI syntax)")
    common.add_argument("-o", "--output-dir", help="artifact directory (overrides [run] output_dir)")
    common.add_argument("--seed", type=int, help="overrides [run] seed")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config value; repeatable")
    common.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in X.CHECKS:
        sub.add_parser(name, parents=[common], help=f"run the {name} check")
    sub.add_parser("suite", parents=[common], help="run every check and aggregate")
    sub.add_parser("default-config", help="print the built-in default config")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "default-config":
        sys.stdout.write(default_config_text())
        return EXIT_OK
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"run.seed={args.seed}")
    if args.output_dir is not None:
        overrides.append(f"run.output_dir={args.output_dir}")
    try:
        cfg = load_config(args.config, overrides)
        out_dir = cfg.output_dir
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "suite":
            return run_suite(cfg, out_dir, args.quiet)
        result = run_check(args.command, cfg, out_dir, args.quiet)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if result.status == X.PASS else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
