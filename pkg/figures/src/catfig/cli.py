"""Command-line figure rendering.

    catfig render  --in run.ndjson --out fig.png [--panels 2|3]
    catfig summary --in ensemble.ndjson --out summary.png

Exit codes: 0 success, 2 usage/schema error.
"""

from __future__ import annotations

import argparse
import sys

from .panels import render_ensemble_summary, render_fig1
from .reader import SchemaVersionError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="catfig")
    sub = parser.add_subparsers(dest="command", required=True)

    p_r = sub.add_parser("render", help="multi-panel trajectory figure")
    p_r.add_argument("--in", dest="infile", required=True)
    p_r.add_argument("--out", dest="outfile", required=True)
    p_r.add_argument("--panels", type=int, choices=(2, 3), default=None)
    p_r.add_argument("--index", type=int, default=0, help="trajectory index in the file")
    p_r.add_argument("--no-jumps", action="store_true")
    p_r.add_argument("--no-modes", action="store_true")

    p_s = sub.add_parser("summary", help="per-seed ensemble summary")
    p_s.add_argument("--in", dest="infile", required=True)
    p_s.add_argument("--out", dest="outfile", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "render":
            render_fig1(
                args.infile,
                args.outfile,
                n_panels=args.panels,
                show_jumps=not args.no_jumps,
                show_modes=not args.no_modes,
                trajectory_index=args.index,
            )
        else:
            render_ensemble_summary(args.infile, args.outfile)
    except (SchemaVersionError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.outfile}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
