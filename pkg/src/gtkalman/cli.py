"""Command-line interface.

Subcommands:
    simulate  run the Monte-Carlo experiment, write rmse/errors/tests CSVs
    sweep     vary the bias covariance over a grid, write a summary table
    decode    decode a fault vector from matrix + outcome files
    disjunct  certify d-disjunctness of a matrix file

Exit codes: 0 success, 2 configuration/file error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import DEFAULT_RB_SWEEP, load_experiment_config, reference_config
from .decoder import DecoderConfig, decode
from .errors import BudgetExceededError, ConfigurationError, NumericError
from .grouptest import is_d_disjunct, load_matrix, load_outcome
from .harness import run_experiment
from .report import (
    plot_rmse,
    plot_sweep,
    write_errors_csv,
    write_rmse_csv,
    write_sweep_csv,
    write_tests_csv,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gtkalman",
        description="Joint Kalman tracking and group-testing fault identification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_experiment_flags(p):
        p.add_argument("--config", type=Path, help="experiment config file (INI schema, see README)")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--runs", type=int, help="override the Monte-Carlo run count")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument(
            "--method",
            action="append",
            dest="methods",
            choices=("proposed", "one_by_one", "all_sensors", "clairvoyant"),
            help="restrict to a method (repeatable)",
        )
        p.add_argument("--plots", action=argparse.BooleanOptionalAction, default=True,
                       help="render figures next to the CSV output")

    sim = sub.add_parser("simulate", help="run the experiment and write CSV reports")
    add_experiment_flags(sim)

    swp = sub.add_parser("sweep", help="vary Rb over a grid, emit a summary table")
    add_experiment_flags(swp)
    swp.add_argument("--rb", type=float, action="append", dest="rb_grid",
                     help="bias covariance grid point (repeatable)")

    dec = sub.add_parser("decode", help="decode faults from matrix + outcome files")
    dec.add_argument("--matrix", type=Path, required=True)
    dec.add_argument("--outcome", type=Path, required=True)
    dec.add_argument("--slack-weight", type=float, default=None)
    dec.add_argument("--round-threshold", type=float, default=None)

    dis = sub.add_parser("disjunct", help="certify d-disjunctness of a matrix file")
    dis.add_argument("--matrix", type=Path, required=True)
    dis.add_argument("-d", type=int, required=True, help="disjunctness order to certify")
    return parser


def _load_experiment(args):
    if args.config is not None:
        experiment, rb_grid = load_experiment_config(args.config)
    else:
        experiment, rb_grid = reference_config(), DEFAULT_RB_SWEEP
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.runs is not None:
        overrides["n_runs"] = args.runs
    if args.methods:
        overrides["methods"] = tuple(dict.fromkeys(args.methods))
    if overrides:
        experiment = replace(experiment, **overrides)
    return experiment, rb_grid


def _cmd_simulate(args) -> int:
    experiment, _ = _load_experiment(args)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    reports = run_experiment(experiment)
    rb = float(experiment.scenario.attack.Rb[0, 0])
    rows = [(rb, rep) for rep in reports.values()]
    write_rmse_csv(out / "rmse.csv", reports)
    write_errors_csv(out / "errors.csv", rows)
    write_tests_csv(out / "tests.csv", rows)
    written = ["rmse.csv", "errors.csv", "tests.csv"]
    if args.plots:
        written += [p.name for p in plot_rmse(out, reports)]
    print(f"wrote {', '.join(written)} to {out}")
    return 0


def _cmd_sweep(args) -> int:
    experiment, rb_grid = _load_experiment(args)
    if args.rb_grid:
        rb_grid = tuple(args.rb_grid)
    methods = tuple(m for m in experiment.methods if m in ("proposed", "one_by_one"))
    if not ("proposed" in methods and "one_by_one" in methods):
        methods = ("proposed", "one_by_one")
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for rb in rb_grid:
        scenario = experiment.scenario
        attack = replace(scenario.attack, Rb=[[float(rb)]])
        swept = replace(experiment, scenario=replace(scenario, attack=attack), methods=methods)
        rows.append((float(rb), run_experiment(swept)))
    write_sweep_csv(out / "sweep.csv", rows)
    written = ["sweep.csv"]
    if args.plots:
        written += [p.name for p in plot_sweep(out, rows)]
    print(f"wrote {', '.join(written)} to {out}")
    return 0


def _cmd_decode(args) -> int:
    phi = load_matrix(args.matrix)
    g = load_outcome(args.outcome)
    cfg = DecoderConfig()
    if args.slack_weight is not None or args.round_threshold is not None:
        cfg = DecoderConfig(
            slack_weight=cfg.slack_weight if args.slack_weight is None else args.slack_weight,
            round_threshold=cfg.round_threshold if args.round_threshold is None else args.round_threshold,
        )
    f_hat = decode(phi, g, cfg)
    print("".join(str(int(b)) for b in f_hat.bits))
    for sensor, time in f_hat.index_pairs():
        print(f"sensor {sensor + 1} @ time {time + 1}")
    return 0


def _cmd_disjunct(args) -> int:
    phi = load_matrix(args.matrix)
    verdict = is_d_disjunct(phi, args.d)
    print(f"{args.d}-disjunct: {'true' if verdict else 'false'}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "sweep": _cmd_sweep,
        "decode": _cmd_decode,
        "disjunct": _cmd_disjunct,
    }
    try:
        return handlers[args.command](args)
    except (ConfigurationError, BudgetExceededError, ValueError, OSError) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"error: numeric: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
