"""Command-line entry points.

Subcommands: run a Monte Carlo benchmark from a JSON config, compute a
cutoff-time curve or latency CDF from a saved trial table, print a
resource estimate, check a real-time operating point, or drive the
systolic elimination array on small matrices from the shell.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from rtdec import harness
from rtdec.gf2 import Gf2Matrix
from rtdec.problems import load_problem
from rtdec.realtime import LatencyModel, max_blocks, tail_verdict
from rtdec.systolic import run_forward, run_full
from rtdec.costmodel import VU19P, DeviceProfile

__all__ = ["main"]


def _parse_bit_matrix(text: str) -> Gf2Matrix:
    """Rows comma-separated; leftmost character of a row is column 0."""
    rows = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk or set(chunk) - {"0", "1"}:
            raise SystemExit(f"bad bit row {chunk!r}; expected e.g. 110,011")
        rows.append([int(ch) for ch in chunk])
    return Gf2Matrix.from_rows(rows)


def _render_bits(matrix: Gf2Matrix) -> list[str]:
    return ["".join(str(b) for b in row) for row in matrix.to_lists()]


def _cmd_run(args) -> int:
    config = harness.RunConfig.from_json(args.config)
    records = harness.run_trials(config)
    os.makedirs(args.out, exist_ok=True)
    harness.write_trials_csv(records, os.path.join(args.out, "trials.csv"))
    if config.budgets:
        curve = harness.cutoff_curve(records, config.budgets)
        harness.write_curve_csv(curve, os.path.join(args.out, "curve.csv"))
    hist = harness.latency_cdf(records)
    harness.write_latency_csv(hist, os.path.join(args.out, "latency.csv"))
    failures = sum(r.status != "success" for r in records)
    lo, hi = harness.wilson_interval(failures, len(records))
    summary = {
        "decoder": config.decoder,
        "trials": len(records),
        "failures": failures,
        "failure_rate": failures / len(records),
        "ci_low": lo,
        "ci_high": hi,
        "max_cycles": max(r.cycles for r in records),
    }
    print(json.dumps(summary, indent=2))
    return 0


def _cmd_curve(args) -> int:
    records = harness.read_trials_csv(args.trials)
    budgets = [float(b) for b in args.budgets.split(",")]
    curve = harness.cutoff_curve(records, budgets, post_only=args.post_only)
    harness.write_curve_csv(curve, args.out)
    print(f"wrote {len(curve)} points to {args.out}")
    return 0


def _cmd_latency(args) -> int:
    records = harness.read_trials_csv(args.trials)
    hist = harness.latency_cdf(records, post_only=args.post_only)
    harness.write_latency_csv(hist, args.out)
    print(f"wrote {len(hist.points)} points to {args.out}")
    return 0


def _cmd_resources(args) -> int:
    problem = load_problem(args.problem) if args.problem else None
    if args.device == "vu19p":
        profile = VU19P
    else:
        with open(args.device) as fp:
            profile = DeviceProfile(**json.load(fp))
    params = {}
    if args.r_max is not None:
        params["r_max"] = args.r_max
    if args.banking is not None:
        params["banking"] = args.banking
    if args.zero_filter_blocks is not None:
        params["zero_filter_blocks"] = args.zero_filter_blocks
    if args.n_clus is not None:
        params["n_clus"] = args.n_clus
    report = harness.resources_report(args.decoder, problem, params,
                                      profile=profile)
    text = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w") as fp:
            fp.write(text + "\n")
    print(text)
    return 0


def _cmd_tail(args) -> int:
    model = LatencyModel(args.tref, args.tmax, args.tgen, args.eps,
                         c=args.blocks)
    verdict = tail_verdict(model)
    blocks = max_blocks(args.tref, args.tmax, args.tgen, args.eps)
    out = dict(dataclasses.asdict(verdict))
    out.update(dataclasses.asdict(blocks))
    print(json.dumps(out, indent=2))
    return 0 if verdict.satisfied else 1


def _cmd_systolic(args) -> int:
    a = _parse_bit_matrix(args.a)
    b = _parse_bit_matrix(args.b) if args.b else None
    runner = run_forward if args.mode == "forward" else run_full
    if args.trace:
        with open(args.trace, "w") as sink:
            result = runner(a, b, engine="cells", trace_sink=sink)
    else:
        result = runner(a, b)
    out = {
        "mode": args.mode,
        "iterations_used": result.iterations_used,
        "readout_cycles": result.readout_cycles,
        "stored": _render_bits(result.stored),
    }
    if result.l:
        out["residuals"] = [format(r, f"0{result.l}b")[::-1]
                            for r in result.residual_ints()]
    print(json.dumps(out, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rtdec", description="decoder benchmark toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a Monte Carlo benchmark")
    p.add_argument("--config", required=True, help="JSON run config")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("curve", help="cutoff-time curve from a trial table")
    p.add_argument("--trials", required=True, help="trials.csv path")
    p.add_argument("--budgets", required=True,
                   help="comma-separated cycle budgets, ascending")
    p.add_argument("--post-only", action="store_true",
                   help="budget only the post-predecoder cycles")
    p.add_argument("--out", required=True, help="curve.csv path")
    p.set_defaults(func=_cmd_curve)

    p = sub.add_parser("latency", help="latency CDF from a trial table")
    p.add_argument("--trials", required=True, help="trials.csv path")
    p.add_argument("--post-only", action="store_true")
    p.add_argument("--out", required=True, help="latency.csv path")
    p.set_defaults(func=_cmd_latency)

    p = sub.add_parser("resources", help="FPGA resource estimate")
    p.add_argument("--decoder", required=True, choices=harness.DECODERS)
    p.add_argument("--problem", help="problem file for computed estimates")
    p.add_argument("--device", default="vu19p",
                   help="vu19p or a JSON profile path")
    p.add_argument("--r-max", type=int, dest="r_max")
    p.add_argument("--banking", type=int)
    p.add_argument("--zero-filter-blocks", type=int, dest="zero_filter_blocks")
    p.add_argument("--n-clus", type=int, dest="n_clus")
    p.add_argument("--out", help="also write the report as JSON here")
    p.set_defaults(func=_cmd_resources)

    p = sub.add_parser("tail", help="real-time operating point check")
    p.add_argument("--tref", type=float, required=True)
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--tgen", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--blocks", type=int, default=1)
    p.set_defaults(func=_cmd_tail)

    p = sub.add_parser("systolic", help="run the elimination array")
    p.add_argument("--a", required=True,
                   help="bit rows, comma separated; leftmost bit is column 0")
    p.add_argument("--b", help="optional spectator matrix, same format")
    p.add_argument("--mode", choices=("forward", "full"), default="forward")
    p.add_argument("--trace", help="write per-iteration NDJSON trace here")
    p.set_defaults(func=_cmd_systolic)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
