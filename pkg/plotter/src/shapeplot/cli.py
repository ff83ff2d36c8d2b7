"""CLI: `shapeplot plot --in <results dir> --out fig.png`."""

from __future__ import annotations

import argparse
import sys

from .render import PANELS, FigureSpec, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="shapeplot")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("plot", help="render the three-panel results figure")
    p.add_argument("--in", dest="input_dir", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--panels", default=",".join(PANELS),
                   help="comma-separated subset of snr,acf,edi")
    p.add_argument("--smooth", action="store_true",
                   help="3-point moving average (recorded in the figure footer)")
    p.add_argument("--w-star", default="30,150",
                   help="comma-separated vertical markers for the EDI panel")
    args = parser.parse_args(argv)

    try:
        spec = FigureSpec(
            input_dir=args.input_dir,
            output_path=args.output,
            panels=tuple(s.strip() for s in args.panels.split(",") if s.strip()),
            w_star_markers=tuple(int(w) for w in args.w_star.split(",") if w),
            smooth=args.smooth,
        )
        out = render(spec)
    except (SchemaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
