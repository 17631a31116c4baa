"""Monte Carlo benchmark driver for the decoder stack.

Each trial samples a fault set and runs the configured pipeline: message
passing alone, or a memory-BP predecoder leg followed on failure by a
short plain-BP refresh whose marginals feed the ordered-statistics or
cluster post-decoder.  Every stage's cycles land in a per-trial ledger
whose sum is asserted against the independently accumulated total.
Helpers turn trial tables into cutoff-time performance curves
(over-budget runs count as failures, Wilson 95% intervals) and latency
CDFs, and serialize everything as CSV with 9-significant-digit floats.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from rtdec import cluster as uf
from rtdec import osd
from rtdec.bp import (
    BpState,
    LegSpec,
    RelayConfig,
    TannerGraph,
    dmem_bp_leg,
    gross_relay_config,
    minsum_bp,
    relay,
    relay_cycles,
    two_gross_relay_config,
)
from rtdec.costmodel import (
    RELAY_GROSS_UTILIZATION,
    STANDARD_OSD_GROSS_UTILIZATION,
    VU19P,
    DeviceProfile,
    estimate_cluster_resources,
    estimate_osd_resources,
    utilization,
)
from rtdec.problems import (
    GROSS_CODE_PARAMS,
    TWO_GROSS_CODE_PARAMS,
    DecodingProblem,
    build_bb_code_problem,
    build_repetition_problem,
    is_logical_failure,
    load_problem,
    sample_faults,
    stack_phenomenological,
)
from rtdec.realtime import LatencyHistogram

__all__ = [
    "DECODERS",
    "PREDECODER_DEFAULTS",
    "RunConfig",
    "TrialRecord",
    "CurvePoint",
    "problem_from_spec",
    "run_trials",
    "wilson_interval",
    "cutoff_curve",
    "latency_cdf",
    "write_trials_csv",
    "read_trials_csv",
    "write_curve_csv",
    "write_latency_csv",
    "resources_report",
]

DECODERS = ("bp", "relay", "filtered_osd", "standard_osd", "cluster")
PREDECODER_DEFAULTS = {"iterations": 80, "gamma0": 0.125,
                       "refresh_iterations": 25}
Z95 = 1.959963984540054


@dataclass(frozen=True)
class RunConfig:
    problem: dict
    decoder: str
    decoder_params: dict = field(default_factory=dict)
    trials: int = 100
    base_seed: int = 0
    budgets: tuple = ()
    cutoff: Optional[float] = None
    predecoder: dict = field(default_factory=dict)
    alpha: int = 2

    def __post_init__(self):
        if self.decoder not in DECODERS:
            raise ValueError(f"unknown decoder {self.decoder!r}")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if self.alpha < 1:
            raise ValueError("alpha must be >= 1")
        object.__setattr__(self, "budgets", tuple(self.budgets))
        object.__setattr__(self, "predecoder",
                           {**PREDECODER_DEFAULTS, **self.predecoder})

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        with open(path) as fp:
            return cls(**json.load(fp))


@dataclass
class TrialRecord:
    trial: int
    seed: int
    status: str
    failure_kind: str
    cycles: int
    cycles_post: int
    stage_cycles: dict[str, int]
    correction: Optional[np.ndarray] = field(default=None, compare=False,
                                             repr=False)


def problem_from_spec(spec: dict) -> DecodingProblem:
    """Build a decoding problem from a config dict (or load one from file)."""
    kind = spec.get("kind")
    if kind == "repetition":
        return build_repetition_problem(int(spec["distance"]), float(spec["p"]))
    if kind == "bb":
        preset = spec.get("preset")
        if preset == "gross":
            l, m, at, bt = GROSS_CODE_PARAMS
        elif preset == "two-gross":
            l, m, at, bt = TWO_GROSS_CODE_PARAMS
        elif preset is None:
            l, m = int(spec["l"]), int(spec["m"])
            at = tuple((int(i), int(j)) for i, j in spec["a_terms"])
            bt = tuple((int(i), int(j)) for i, j in spec["b_terms"])
        else:
            raise ValueError(f"unknown preset {preset!r}")
        problem = build_bb_code_problem(l, m, at, bt, float(spec["p_err"]))
        rounds = spec.get("rounds")
        if rounds:
            p_meas = float(spec.get("p_meas", spec["p_err"]))
            problem = stack_phenomenological(problem, int(rounds), p_meas)
        return problem
    if kind == "file":
        return load_problem(spec["path"])
    raise ValueError(f"unknown problem kind {kind!r}")


def _relay_config(params: dict) -> RelayConfig:
    preset = params.get("preset")
    seed = int(params.get("seed", 0))
    if preset == "gross":
        return gross_relay_config(seed)
    if preset == "two-gross":
        return two_gross_relay_config(seed)
    legs = []
    for leg in params["legs"]:
        t = int(leg["iterations"])
        if "gamma0" in leg:
            legs.append(LegSpec(t, gamma0=float(leg["gamma0"])))
        else:
            lo, hi = leg["gamma_range"]
            legs.append(LegSpec(t, gamma_range=(float(lo), float(hi))))
    return RelayConfig(tuple(legs), seed=seed)


def _osd_config(params: dict) -> osd.OsdConfig:
    return osd.OsdConfig(
        lambda_confident=float(params.get("lambda_confident", 6.0)),
        r_max=int(params.get("r_max", 500)),
        banking=int(params.get("banking", 8)),
        zero_filter_blocks=int(params.get("zero_filter_blocks", 9)),
        padded_timing=bool(params.get("padded_timing", False)),
        use_systolic_sim=bool(params.get("use_systolic_sim", False)),
    )


def _uf_config(params: dict) -> uf.UfConfig:
    sizes = params.get("solver_sizes")
    sizes = uf.GROSS_SOLVER_SIZES if sizes is None else \
        tuple((int(r), int(c)) for r, c in sizes)
    return uf.UfConfig(
        lambda_accept=float(params.get("lambda_accept", 0.0)),
        lambda_suspicious=float(params.get("lambda_suspicious", 2.0)),
        n_clus=int(params.get("n_clus", 50)),
        solver_sizes=sizes,
        bucket_width=int(params.get("bucket_width", 32)),
    )


def _run_decoder(problem, graph, syndrome, config: RunConfig):
    """One pipeline pass; returns (correction | None, failure kind | None,
    stage ledger, predecoder-leg cycles, independently billed total)."""
    params = config.decoder_params
    alpha = config.alpha
    stages: dict[str, int] = {}

    if config.decoder == "bp":
        out = minsum_bp(problem, syndrome,
                        int(params.get("max_iterations", 100)), graph=graph)
        stages["bp"] = relay_cycles(out.iterations, alpha)
        if out.converged:
            return out.correction, None, stages, 0, stages["bp"]
        return None, "non_convergence", stages, 0, stages["bp"]

    if config.decoder == "relay":
        cfg = _relay_config(params)
        out = relay(problem, syndrome, cfg, graph=graph)
        stages["relay"] = relay_cycles(out.iterations, alpha)
        first_leg = out.iterations if out.legs_used == 1 else cfg.legs[0].T
        pre_cycles = relay_cycles(first_leg, alpha)
        if out.converged:
            return out.correction, None, stages, pre_cycles, stages["relay"]
        return None, "non_convergence", stages, pre_cycles, stages["relay"]

    pre = config.predecoder
    state = BpState(graph)
    gammas = np.full(problem.N, float(pre["gamma0"]))
    pre_out = dmem_bp_leg(state, syndrome, gammas, int(pre["iterations"]))
    pre_cycles = relay_cycles(pre_out.iterations, alpha)
    stages["predecoder"] = pre_cycles
    billed = pre_cycles
    if pre_out.converged:
        return pre_out.correction, None, stages, pre_cycles, billed

    refresh = minsum_bp(problem, syndrome, int(pre["refresh_iterations"]),
                        graph=graph)
    stages["bp_refresh"] = relay_cycles(refresh.iterations, alpha)
    billed += stages["bp_refresh"]
    if refresh.converged:
        return refresh.correction, None, stages, pre_cycles, billed
    llrs = refresh.llrs

    if config.decoder in ("filtered_osd", "standard_osd"):
        if config.decoder == "filtered_osd":
            out = osd.filtered_osd(problem, syndrome, llrs, _osd_config(params))
        else:
            out = osd.standard_osd(problem, syndrome, llrs)
        for name, v in out.stage_cycles.items():
            stages["osd_" + name] = v
        billed += out.cycles
        if out.status == "success":
            return out.correction, None, stages, pre_cycles, billed
        kind = "overflow" if out.status == "overflow_fail" else "non_convergence"
        return None, kind, stages, pre_cycles, billed

    out = uf.decode(problem, syndrome, llrs, _uf_config(params))
    for name, v in out.stage_cycles.items():
        stages["uf_" + name] = v
    billed += out.cycles
    if out.status == "success":
        return out.correction, None, stages, pre_cycles, billed
    kind = "overflow" if out.status.endswith("_overflow") else "non_convergence"
    return None, kind, stages, pre_cycles, billed


def run_trials(config: RunConfig,
               problem: Optional[DecodingProblem] = None) -> list[TrialRecord]:
    """Deterministic trial table; trial i depends only on base_seed + i."""
    if problem is None:
        problem = problem_from_spec(config.problem)
    graph = TannerGraph(problem)
    records = []
    for t in range(config.trials):
        seed = config.base_seed + t
        truth, syndrome = sample_faults(problem, seed)
        correction, kind, stages, pre_cycles, billed = _run_decoder(
            problem, graph, syndrome, config)
        cycles = sum(stages.values())
        assert cycles == billed, "stage ledger out of step with billing"
        if correction is not None:
            if is_logical_failure(problem, truth, correction):
                status, fkind = "failure", "logical"
            else:
                status, fkind = "success", ""
        else:
            status, fkind = "failure", kind
        if config.cutoff is not None and status == "success" \
                and cycles > config.cutoff:
            status, fkind = "failure", "cutoff"
        records.append(TrialRecord(t, seed, status, fkind, cycles,
                                   cycles - pre_cycles, stages, correction))
    return records


def wilson_interval(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    """95% score interval for k failures in n trials."""
    if n < 1 or not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n, n >= 1")
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    # the interval contains p exactly; keep that under rounding
    return min(p, max(0.0, center - half)), max(p, min(1.0, center + half))


@dataclass(frozen=True)
class CurvePoint:
    budget: float
    rate: float
    ci_low: float
    ci_high: float

    def __post_init__(self):
        assert 0.0 <= self.rate <= 1.0
        assert self.ci_low <= self.rate <= self.ci_high


def cutoff_curve(records: Sequence[TrialRecord], budgets,
                 post_only: bool = False) -> list[CurvePoint]:
    """Failure rate when every run over the budget counts as failed."""
    if not records:
        raise ValueError("empty trial table")
    budgets = list(budgets)
    if any(b > c for b, c in zip(budgets, budgets[1:])):
        raise ValueError("budgets must be sorted ascending")
    n = len(records)
    points = []
    for b in budgets:
        k = 0
        for r in records:
            spent = r.cycles_post if post_only else r.cycles
            if r.status != "success" or spent > b:
                k += 1
        lo, hi = wilson_interval(k, n)
        points.append(CurvePoint(float(b), k / n, lo, hi))
    return points


def latency_cdf(records: Sequence[TrialRecord],
                post_only: bool = False) -> LatencyHistogram:
    if not records:
        raise ValueError("empty trial table")
    spent = [r.cycles_post if post_only else r.cycles for r in records]
    return LatencyHistogram.from_samples(spent)


def _fmt(x) -> str:
    if isinstance(x, float):
        return "%.9g" % x
    return str(x)


def write_trials_csv(records: Sequence[TrialRecord], path) -> None:
    stage_names = sorted({k for r in records for k in r.stage_cycles})
    header = ["trial", "seed", "status", "failure_kind", "cycles",
              "cycles_post"] + ["stage_" + s for s in stage_names]
    with open(path, "w", newline="") as fp:
        w = csv.writer(fp)
        w.writerow(header)
        for r in records:
            row = [r.trial, r.seed, r.status, r.failure_kind, r.cycles,
                   r.cycles_post]
            row += [r.stage_cycles.get(s, 0) for s in stage_names]
            w.writerow(row)


def read_trials_csv(path) -> list[TrialRecord]:
    records = []
    with open(path, newline="") as fp:
        for row in csv.DictReader(fp):
            stages = {k[len("stage_"):]: int(v) for k, v in row.items()
                      if k.startswith("stage_")}
            records.append(TrialRecord(
                int(row["trial"]), int(row["seed"]), row["status"],
                row["failure_kind"], int(row["cycles"]),
                int(row["cycles_post"]), stages))
    return records


def write_curve_csv(points: Sequence[CurvePoint], path) -> None:
    with open(path, "w", newline="") as fp:
        w = csv.writer(fp)
        w.writerow(["budget", "rate", "ci_low", "ci_high"])
        for p in points:
            w.writerow([_fmt(p.budget), _fmt(p.rate), _fmt(p.ci_low),
                        _fmt(p.ci_high)])


def write_latency_csv(hist: LatencyHistogram, path) -> None:
    with open(path, "w", newline="") as fp:
        w = csv.writer(fp)
        w.writerow(["budget", "cumulative_fraction"])
        for budget, fraction in hist.points:
            w.writerow([_fmt(budget), _fmt(fraction)])


def resources_report(decoder: str, problem: Optional[DecodingProblem],
                     params: Optional[dict] = None,
                     profile: DeviceProfile = VU19P) -> dict:
    """Resource estimate (or the published external row) as a JSON-ready dict."""
    params = params or {}
    if decoder == "relay":
        return {"decoder": decoder, "utilization": dict(RELAY_GROSS_UTILIZATION),
                "source": "published"}
    if decoder == "standard_osd":
        return {"decoder": decoder,
                "utilization": dict(STANDARD_OSD_GROSS_UTILIZATION),
                "source": "published"}
    if problem is None:
        raise ValueError("problem required for computed estimates")
    if decoder == "filtered_osd":
        est = estimate_osd_resources(
            problem.M, problem.N,
            r_max=int(params.get("r_max", 500)),
            banking=int(params.get("banking", 8)),
            zero_filter_blocks=int(params.get("zero_filter_blocks", 9)),
            profile=profile)
    elif decoder == "cluster":
        sizes = params.get("solver_sizes")
        sizes = uf.GROSS_SOLVER_SIZES if sizes is None else \
            tuple((int(r), int(c)) for r, c in sizes)
        est = estimate_cluster_resources(
            problem.M, problem.N,
            n_clus=int(params.get("n_clus", 50)),
            solver_sizes=sizes, profile=profile)
    else:
        raise ValueError(f"no resource model for {decoder!r}")
    return {
        "decoder": decoder,
        "m": problem.M,
        "n": problem.N,
        "counts": {"ffs": est.ffs, "luts": est.luts, "brams": est.brams,
                   "urams": est.urams},
        "breakdown": {name: asdict(c) for name, c in est.breakdown.items()},
        "utilization": utilization(est, profile),
        "device": asdict(profile),
        "source": "estimated",
    }
