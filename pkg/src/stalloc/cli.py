"""Command-line entry point: ``stalloc {thresholds,compare,validate}``.

Exit codes: 0 success, 1 validation failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .dp import ThresholdTable, compute_thresholds
from .errors import ConfigError
from .extreme import max_distribution
from .simulator import POLICIES, monte_carlo
from .spatial import utility_distribution
from .validation import run_all

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG = 0, 1, 2

COMPARE_HEADER = ["sweep_param", "sweep_value", "policy", "mean_utility", "stderr", "reps"]


def build_table(config: cfgmod.ExperimentConfig) -> ThresholdTable:
    scenario = config.scenario()
    base = utility_distribution(scenario, config.utility_model(), config.intensity())
    dist = max_distribution(scenario.mean_requests, base)
    return compute_thresholds(scenario.horizon, scenario.resources, dist)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML experiment file")
    common.add_argument("--seed", type=int)
    common.add_argument("--reps", type=int)
    common.add_argument("--jobs", type=int)
    common.add_argument("--out", help="output path (relative paths honour $%s)" % cfgmod.OUTPUT_DIR_ENV)
    common.add_argument("--radius", type=float)
    common.add_argument("--rate", type=float, help="arrival density per unit area per slot time")
    common.add_argument("--slot", type=float)
    common.add_argument("-T", "--horizon", type=int)
    common.add_argument("-N", "--resources", type=int)
    common.add_argument("--model", choices=["power", "exponential"])
    common.add_argument("--eta", type=float)
    common.add_argument("--alpha", type=float)
    common.add_argument("--law", choices=["exponential", "uniform"])
    common.add_argument("--mu", type=float, help="rate of the exponential intensity")
    common.add_argument("--beta", type=float, help="upper end of the uniform intensity")
    common.add_argument("--sweep", choices=["none", "lambda", "mu_inv"])
    common.add_argument("--sweep-values", type=float, nargs="+", dest="sweep_values")
    common.add_argument("--random-p", type=float, dest="random_p")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="stalloc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("thresholds", parents=[common], help="build and export the threshold table")
    sub.add_parser("compare", parents=[common], help="Monte Carlo comparison of policies")
    p = sub.add_parser("validate", parents=[common], help="run numerical self-checks")
    p.add_argument("--table", type=Path, help="check this threshold CSV instead of a fresh one")
    return parser


_OVERRIDES = (
    "seed", "reps", "jobs", "out", "radius", "rate", "slot", "horizon", "resources", "model",
    "eta", "alpha", "law", "mu", "beta", "sweep", "sweep_values", "random_p",
)


def resolve_config(args) -> cfgmod.ExperimentConfig:
    base = cfgmod.load(args.config) if args.config else cfgmod.ExperimentConfig()
    overrides = {name: getattr(args, name) for name in _OVERRIDES}
    return base.with_overrides(**overrides).validate()


def cmd_thresholds(config: cfgmod.ExperimentConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    table = build_table(config)
    path = config.output_path("thresholds.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path)
    N = table.N
    stdout.write("t    " + "".join(f"{'n=' + str(n):>10}" for n in range(1, N + 1)) + "\n")
    for t in range(1, table.T + 1):
        cells = []
        for n in range(1, N + 1):
            r = table.rho[t, n]
            cells.append(f"{'-':>10}" if np.isnan(r) else f"{r:10.4f}")
        stdout.write(f"{t:<5}" + "".join(cells) + "\n")
    stdout.write(f"wrote {path}\n")
    return EXIT_OK


def compare_rows(config: cfgmod.ExperimentConfig):
    for axis, value, point in config.sweep_points():
        scenario = point.scenario()
        table = build_table(point)
        res = monte_carlo(
            scenario, point.utility_model(), point.intensity(), table,
            policies=POLICIES, reps=point.reps, seed=point.seed, p=point.random_p, jobs=point.jobs,
        )
        for name in POLICIES:
            s = res.summary[name]
            yield [axis, "" if value is None else repr(float(value)), name,
                   repr(s.mean), repr(s.stderr), s.reps]


def cmd_compare(config: cfgmod.ExperimentConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    path = config.output_path("compare.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = list(compare_rows(config))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COMPARE_HEADER)
        writer.writerows(rows)
    for axis, value, name, mean, stderr, reps in rows:
        label = f"{axis}={value}" if value else axis
        stdout.write(f"{label:<14} {name:<8} {float(mean):12.5f} +- {float(stderr):.5f}\n")
    stdout.write(f"wrote {path}\n")
    return EXIT_OK


def cmd_validate(config: cfgmod.ExperimentConfig, table_path=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    table = None
    if table_path is not None:
        try:
            table = ThresholdTable.from_csv(table_path)
        except (OSError, ValueError, KeyError) as exc:
            stdout.write(f"FAIL threshold table readable: observed={exc} expected=valid CSV\n")
            return EXIT_VALIDATION
    failed = False
    lines = []
    for check in run_all(config, table):
        lines.append(check.line())
        stdout.write(check.line() + "\n")
        failed |= check.gated and not check.passed
    if config.out:
        path = config.output_path("validate.txt")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n")
    return EXIT_VALIDATION if failed else EXIT_OK


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = resolve_config(args)
    except ConfigError as exc:
        for field, message in exc.problems:
            print(f"config error: {field}: {message}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "thresholds":
        return cmd_thresholds(config)
    if args.command == "compare":
        return cmd_compare(config)
    return cmd_validate(config, args.table)


if __name__ == "__main__":
    sys.exit(main())
