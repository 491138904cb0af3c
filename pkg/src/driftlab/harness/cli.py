"""Command-line entry point: exp1..exp4 runners plus a selftest subcommand."""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .experiments import run_exp1, run_exp2, run_exp3, run_exp4
from .io import write_runs_csv, write_summary_json
from .selftest import run_selftest

__all__ = ["cli_main", "main"]

_RUNNERS = {
    "exp1": run_exp1,
    "exp2": run_exp2,
    "exp3": run_exp3,
    "exp4": run_exp4,
}

SEED_ENV_VAR = "DRIFTLAB_SEED"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftlab",
        description="Drift-feedback learning experiments and verification suite.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for exp in _RUNNERS:
        p = sub.add_parser(exp, help=f"run {exp} and write runs.csv + summary.json")
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None, help="single-seed override")
    sub.add_parser("selftest", help="run the built-in oracle checks")
    return parser


def cli_main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "selftest":
        return run_selftest()

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if cfg.experiment != args.command:
        print(
            f"error: config is for {cfg.experiment!r}, not {args.command!r}",
            file=sys.stderr,
        )
        return 2

    seed_override = args.seed
    env_seed = os.environ.get(SEED_ENV_VAR)
    if seed_override is None and env_seed is not None:
        try:
            seed_override = int(env_seed)
        except ValueError:
            print(f"error: {SEED_ENV_VAR}={env_seed!r} is not an integer", file=sys.stderr)
            return 2
    if seed_override is not None:
        cfg = dataclasses.replace(cfg, seeds=[seed_override])
    if args.out is not None:
        cfg = dataclasses.replace(cfg, out_dir=args.out)

    try:
        cfg.validate()
        rows, summary = _RUNNERS[args.command](cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    out = Path(cfg.out_dir)
    write_runs_csv(out / "runs.csv", rows)
    write_summary_json(out / "summary.json", summary)
    print(f"wrote {out / 'runs.csv'} ({len(rows)} runs)")
    for key, value in summary.items():
        if isinstance(value, (int, float, str)) and key != "experiment":
            print(f"  {key}: {value}")
    return 0


def main() -> None:
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
