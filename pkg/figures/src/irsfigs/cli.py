"""CLI: irs-figures render --csv sweep.csv --figure fig8 --out fig8.png"""

from __future__ import annotations

import argparse
import sys

from .render import FIGURES, EmptyAggregateError, SchemaVersionError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irs-figures", description="Render diagnosis sweep figures"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    render_p = sub.add_parser("render", help="render one figure from a sweep CSV")
    render_p.add_argument("--csv", required=True, help="sweep CSV path")
    render_p.add_argument("--figure", required=True, choices=sorted(FIGURES))
    render_p.add_argument("--out", required=True, help="output image path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = render(args.csv, args.figure, args.out)
    except (SchemaVersionError, EmptyAggregateError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {result.out_path} ({len(result.series)} series)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
