"""figplots render --figure fig3d --in scan.csv --out fig3d.png"""

from __future__ import annotations

import argparse
import sys

from .render import SchemaError, render
from .schema import FIGURES


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="figplots")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render a figure analogue from CSVs")
    p.add_argument("--figure", required=True, choices=sorted(FIGURES))
    p.add_argument("--in", dest="inputs", action="append", required=True,
                   help="input CSV (repeat for multi-input figures)")
    p.add_argument("--out", required=True, help="output PNG path")
    args = parser.parse_args(argv)
    try:
        render(args.figure, args.inputs, args.out)
    except (SchemaError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
