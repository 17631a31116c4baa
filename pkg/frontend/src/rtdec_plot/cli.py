"""Command-line figure rendering for benchmark CSV tables."""
from __future__ import annotations

import argparse
import sys

from rtdec_plot.plots import PlotSpec, render_curve, render_latency


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rtdec-plot", description="render benchmark CSVs as figures")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (("curve", "rate vs cycle budget, log rate axis"),
                            ("latency", "cumulative latency step plot")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--in", dest="inputs", action="append", required=True,
                       metavar="CSV", help="input series; repeatable")
        p.add_argument("--label", dest="labels", action="append",
                       help="series label; repeat once per --in")
        p.add_argument("--out", required=True, help="output .png or .svg")
        p.add_argument("--tref", type=float, help="T_ref marker position")
        p.add_argument("--tgen", type=float, help="T_gen marker position")
        p.add_argument("--tmax", type=float, help="T_max marker position")
        p.add_argument("--title", default="")
        if name == "curve":
            p.add_argument("--trials", type=int,
                           help="trial count behind the tables; needed "
                                "to floor zero rates on the log axis")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(
        inputs=tuple(args.inputs),
        out=args.out,
        labels=tuple(args.labels) if args.labels else None,
        trials=getattr(args, "trials", None),
        t_ref=args.tref,
        t_gen=args.tgen,
        t_max=args.tmax,
        title=args.title,
    )
    render = render_curve if args.command == "curve" else render_latency
    result = render(spec)
    print(f"wrote {result.image_path} and {result.data_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
