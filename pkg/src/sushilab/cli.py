"""Command-line front-end: ``sushilab <experiment> --seed S --replicates R``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, SushilabError
from .experiments import EXPERIMENTS, list_experiments, load_config, run


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sushilab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS + ("all",):
        p = sub.add_parser(name, help=f"run the {name} experiment" if name != "all" else "run every experiment")
        p.add_argument("--config", type=Path, help="INI config file ([run] and [machine] sections)")
        p.add_argument("--seed", type=int)
        p.add_argument("--replicates", type=int)
        p.add_argument("--horizon", type=int)
        p.add_argument("--window-stage", type=int)
        p.add_argument("--preset")
        p.add_argument("--out", type=Path)
        p.add_argument("--plots", action="store_true", help="also render PNG figures from the CSVs")
    sub.add_parser("list", help="list experiments")
    p = sub.add_parser("plot", help="render figures from the CSVs in a report directory")
    p.add_argument("out", type=Path)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list":
        for name, description, statement in list_experiments():
            print(f"{name:10s} {description}\n{'':10s} statement: {statement}")
        return 0
    if args.command == "plot":
        from .plotting import plot_directory
        for path in plot_directory(args.out):
            print(path)
        return 0
    try:
        config = load_config(args.config, experiment=args.command, seed=args.seed, replicates=args.replicates,
                             horizon=args.horizon, window_stage=args.window_stage, preset=args.preset,
                             out=args.out)
        report = run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SushilabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    for name, row in report.rows:
        print(f"{'PASS' if row.verdict else 'FAIL'}  {name}:{row.check}  estimate={row.estimate} oracle={row.oracle}")
    if args.plots:
        from .plotting import plot_directory
        plot_directory(config.out)
    print(f"{'all checks passed' if report.passed else 'some checks FAILED'}; reports in {config.out}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
