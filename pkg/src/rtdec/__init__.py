"""Real-time decoder toolkit for quantum LDPC codes.

Decoders (min-sum message passing with memory and relay legs, filtered
ordered-statistics, bitmap cluster growth), a rank-tolerant GF(2) solver
core with a cycle-accurate systolic-array model, FPGA resource estimates,
real-time latency analysis, and a Monte Carlo benchmark harness.
"""

from rtdec.gf2 import Gf2Matrix
from rtdec.problems import (
    DecodingProblem,
    load_problem,
    save_problem,
    build_repetition_problem,
    build_bb_code_problem,
    sample_faults,
    is_logical_failure,
)
from rtdec.bp import (
    LegSpec,
    MpOutcome,
    RelayConfig,
    TannerGraph,
    gross_relay_config,
    minsum_bp,
    relay,
    relay_cycles,
    two_gross_relay_config,
)
from rtdec.osd import OsdConfig, OsdOutcome, filtered_osd, standard_osd
from rtdec.cluster import UfConfig, UfOutcome
from rtdec.cluster import decode as cluster_decode
from rtdec.systolic import run_forward, run_full, run_solver
from rtdec.realtime import (
    LatencyHistogram,
    LatencyModel,
    max_blocks,
    simulate_backlog,
    tail_verdict,
)
from rtdec.costmodel import (
    VU19P,
    DeviceProfile,
    ResourceEstimate,
    estimate_cluster_resources,
    estimate_osd_resources,
    utilization,
)
from rtdec.harness import RunConfig, cutoff_curve, latency_cdf, run_trials

__all__ = [
    "Gf2Matrix",
    "DecodingProblem",
    "load_problem",
    "save_problem",
    "build_repetition_problem",
    "build_bb_code_problem",
    "sample_faults",
    "is_logical_failure",
    "LegSpec",
    "MpOutcome",
    "RelayConfig",
    "TannerGraph",
    "gross_relay_config",
    "minsum_bp",
    "relay",
    "relay_cycles",
    "two_gross_relay_config",
    "OsdConfig",
    "OsdOutcome",
    "filtered_osd",
    "standard_osd",
    "UfConfig",
    "UfOutcome",
    "cluster_decode",
    "run_forward",
    "run_full",
    "run_solver",
    "LatencyHistogram",
    "LatencyModel",
    "max_blocks",
    "simulate_backlog",
    "tail_verdict",
    "VU19P",
    "DeviceProfile",
    "ResourceEstimate",
    "estimate_cluster_resources",
    "estimate_osd_resources",
    "utilization",
    "RunConfig",
    "cutoff_curve",
    "latency_cdf",
    "run_trials",
]

__version__ = "0.1.0"
