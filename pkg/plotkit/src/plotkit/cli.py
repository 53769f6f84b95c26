"""plotkit CLI: plotkit <figure-id> --in results.csv --out fig.png"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_IDS, FigureSpec, render
from .resultsio import SchemaError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plotkit",
        description="Render figures from link-simulation result files")
    parser.add_argument("figure", choices=FIGURE_IDS)
    parser.add_argument("--in", dest="inputs", action="append",
                        required=True, help="results CSV/JSON (repeatable)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--linear-y", action="store_true",
                        help="linear instead of log y axis")
    parser.add_argument("--nm", type=float, default=None,
                        help="operating point filter (hybrid_decomp)")
    parser.add_argument("--scheme", default=None,
                        help="scheme filter (ctrl_gain)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    spec = FigureSpec(figure=args.figure, inputs=args.inputs,
                      output=args.out, log_y=not args.linear_y,
                      nm=args.nm, scheme=args.scheme)
    try:
        path = render(spec)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
