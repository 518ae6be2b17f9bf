"""Batch figure rendering from the sampler's CSV outputs.

Exit codes: 0 success, 1 schema/data failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, render
from .schemas import SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unfolding-plots", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from CSV inputs")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--input", required=True, help="primary CSV input")
    p.add_argument("--input-b", dest="input_b", default=None, help="second ranks file (rank-scatter)")
    p.add_argument("--out", required=True, help="output image path (.png, .pdf, .svg)")
    p.add_argument("--column", default="total", help="trace column name")
    p.add_argument("--bins", type=int, default=40, help="prior-hist bin count")
    p.add_argument("--title", default="")
    p.add_argument("--xlabel", default="")
    p.add_argument("--ylabel", default="")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            kind=args.kind,
            input=args.input,
            input_b=args.input_b,
            output=args.out,
            column=args.column,
            bins=args.bins,
            title=args.title,
            xlabel=args.xlabel,
            ylabel=args.ylabel,
        )
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    try:
        render(spec)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{args.kind} -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
