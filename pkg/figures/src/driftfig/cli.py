"""Command-line entry point: figures --kind <kind> --runs <csv> --summary <json> --out <img>."""

from __future__ import annotations

import argparse
import sys

from .render import FIGURE_KINDS, FigureSpec, SchemaError, render

__all__ = ["cli_main", "main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render a figure from harness runs.csv + summary.json outputs.",
    )
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--runs", required=True, help="path to runs.csv")
    parser.add_argument("--summary", required=True, help="path to summary.json")
    parser.add_argument("--out", required=True, help="output image path")
    return parser


def cli_main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    spec = FigureSpec(
        runs_path=args.runs,
        summary_path=args.summary,
        kind=args.kind,
        out_path=args.out,
    )
    try:
        out = render(spec)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


def main() -> None:
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
