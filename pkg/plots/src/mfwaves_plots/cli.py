"""`plots render --spec figure.json`: batch figure rendering."""
from __future__ import annotations

import argparse
import sys

from .figures import FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plots", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from a spec file")
    p.add_argument("--spec", required=True, help="figure spec JSON")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        result = render(FigureSpec.from_json(args.spec))
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {result.png} and {result.svg}")
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
