"""Ordered-statistics decoding on a filtered survivor list.

The filtered pipeline thresholds the marginals, sorts the survivors
ascending, pulls the matching columns out of the decoding matrix, drops
rows that became all zero, solves the reduced system, and scatters the
solution back through the inverse permutation.  Each stage carries the
cycle count of its streaming-hardware counterpart: dual-port banked reads
for the filter, a broadcast-insertion sorter billing one cycle per entry,
dual-port column extraction, blockwise zero-row scan, the systolic solver
formula, and a two-per-cycle writeback.

Standard OSD-0 (first rank(H) independent columns in score order, solved
through a generalized inverse) is kept as the accuracy and cycle baseline
with its own flat cycle count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from rtdec import gf2
from rtdec.gf2 import Gf2Matrix
from rtdec.problems import DecodingProblem
from rtdec.systolic import run_solver

__all__ = [
    "STAGES",
    "OsdConfig",
    "RankedList",
    "OsdOutcome",
    "filter_and_rank",
    "extract_and_zero_filter",
    "filtered_osd",
    "standard_osd",
]

STAGES = ("filter", "sort", "extract", "zero_filter", "solve", "unpermute")


@dataclass(frozen=True)
class OsdConfig:
    lambda_confident: float
    r_max: int = 500
    banking: int = 8
    osd_mode: str = "filtered"
    zero_filter_blocks: int = 9
    padded_timing: bool = False
    use_systolic_sim: bool = False

    def __post_init__(self):
        if self.r_max < 1:
            raise ValueError("r_max must be >= 1")
        if self.banking < 1:
            raise ValueError("banking must be >= 1")
        if self.zero_filter_blocks < 1:
            raise ValueError("zero_filter_blocks must be >= 1")
        if self.osd_mode not in ("filtered", "standard"):
            raise ValueError(f"unknown osd_mode {self.osd_mode!r}")


@dataclass(frozen=True)
class RankedList:
    """Survivor LLRs sorted ascending, fault index breaking ties."""

    entries: tuple[tuple[float, int], ...]
    overflowed: bool

    def indices(self) -> list[int]:
        return [j for _, j in self.entries]


@dataclass(frozen=True)
class OsdOutcome:
    status: str
    correction: np.ndarray
    cycles: int
    stage_cycles: dict[str, int] = field(compare=False)

    def __post_init__(self):
        assert self.status in ("success", "overflow_fail", "unsolvable_fail")
        assert self.cycles == sum(self.stage_cycles.values())


def filter_and_rank(llrs, config: OsdConfig) -> tuple[RankedList, int, int]:
    """Threshold and sort; returns (ranked, filter_cycles, sort_cycles).

    Overflow keeps the full sorted list so callers can inspect it, but the
    decode must then abandon the trial.
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    n = llrs.size
    survivors = np.flatnonzero(llrs < config.lambda_confident)
    entries = tuple(sorted((float(llrs[j]), int(j)) for j in survivors))
    overflowed = len(entries) > config.r_max
    filter_cycles = math.ceil(n / (2 * config.banking))
    sort_cycles = config.r_max if config.padded_timing else len(entries)
    return RankedList(entries, overflowed), filter_cycles, sort_cycles


def extract_and_zero_filter(problem: DecodingProblem, ranked: RankedList,
                            config: OsdConfig) -> tuple[Gf2Matrix, list[int], int, int]:
    """Column gather plus all-zero-row deletion.

    Returns (reduced matrix, kept row indices, extract cycles, zero-filter
    cycles).  Column t of the result is the ranked entry t's fault column.
    """
    if ranked.overflowed:
        raise ValueError("ranked list overflowed; nothing to extract")
    r = len(ranked.entries)
    rows = [0] * problem.M
    for t, (_, j) in enumerate(ranked.entries):
        for i in problem.column_rows(j):
            rows[int(i)] |= 1 << t
    kept_rows = [i for i in range(problem.M) if rows[i]]
    reduced = Gf2Matrix(len(kept_rows), r, [rows[i] for i in kept_rows])
    width = config.r_max if config.padded_timing else r
    extract_cycles = math.ceil(width / 2)
    zero_filter_cycles = math.ceil(problem.M / config.zero_filter_blocks)
    return reduced, kept_rows, extract_cycles, zero_filter_cycles


def _zero_stages() -> dict[str, int]:
    return {name: 0 for name in STAGES}


def _finish(status: str, correction: np.ndarray, stages: dict[str, int]) -> OsdOutcome:
    return OsdOutcome(status, correction, sum(stages.values()), stages)


def filtered_osd(problem: DecodingProblem, syndrome, llrs,
                 config: OsdConfig) -> OsdOutcome:
    """Full filtered pipeline; failures come back as statuses, never raises."""
    syndrome = np.asarray(syndrome, dtype=np.uint8)
    llrs = np.asarray(llrs, dtype=np.float64)
    if syndrome.shape != (problem.M,):
        raise ValueError("syndrome length mismatch")
    if llrs.shape != (problem.N,):
        raise ValueError("llr length mismatch")
    stages = _zero_stages()
    correction = np.zeros(problem.N, dtype=np.uint8)

    ranked, stages["filter"], sort_cycles = filter_and_rank(llrs, config)
    if ranked.overflowed:
        return _finish("overflow_fail", correction, stages)
    stages["sort"] = sort_cycles

    reduced, kept_rows, stages["extract"], stages["zero_filter"] = \
        extract_and_zero_filter(problem, ranked, config)

    kept_mask = np.zeros(problem.M, dtype=bool)
    kept_mask[kept_rows] = True
    if syndrome[~kept_mask].any():
        # a fired check with no surviving fault can never be explained
        return _finish("unsolvable_fail", correction, stages)

    r = len(ranked.entries)
    y = [int(b) for b in syndrome[kept_mask]]
    if reduced.m == 0:
        solution_bits = [0] * r
        stages["solve"] = max(3 * r - 1, 0)
    elif config.use_systolic_sim:
        report, stages["solve"] = run_solver(reduced, y)
        solution_bits = report.solution_bits() if report.solvable else None
    else:
        report = gf2.solve(reduced, y)
        if report.solvable:
            stages["solve"] = reduced.m + 3 * r - 1
            solution_bits = report.solution_bits()
        else:
            stages["solve"] = reduced.m + r - 1
            solution_bits = None

    if solution_bits is None:
        return _finish("unsolvable_fail", correction, stages)

    for t, (_, j) in enumerate(ranked.entries):
        correction[j] = solution_bits[t]
    stages["unpermute"] = math.ceil(r / 2)
    out = _finish("success", correction, stages)
    assert not np.any(problem.syndrome_of(correction) ^ syndrome)
    return out


def standard_osd(problem: DecodingProblem, syndrome, llrs) -> OsdOutcome:
    """OSD-0 over all columns: greedy independent set in score order.

    The selected columns span the column space, so any syndrome in the
    image decodes; cycles are the flat 3M + 2N pipeline count.
    """
    syndrome = np.asarray(syndrome, dtype=np.uint8)
    llrs = np.asarray(llrs, dtype=np.float64)
    if syndrome.shape != (problem.M,):
        raise ValueError("syndrome length mismatch")
    if llrs.shape != (problem.N,):
        raise ValueError("llr length mismatch")
    order = np.lexsort((np.arange(problem.N), llrs))

    by_lead: dict[int, int] = {}
    selected: list[int] = []
    for j in order:
        c = 0
        for i in problem.column_rows(int(j)):
            c |= 1 << int(i)
        while c:
            lead = (c & -c).bit_length() - 1
            if lead not in by_lead:
                break
            c ^= by_lead[lead]
        if c:
            by_lead[(c & -c).bit_length() - 1] = c
            selected.append(int(j))

    rows = [0] * problem.M
    for t, j in enumerate(selected):
        for i in problem.column_rows(j):
            rows[int(i)] |= 1 << t
    h_s = Gf2Matrix(problem.M, len(selected), rows)
    x = gf2.generalized_inverse(h_s).mul_vec(gf2.bits_to_int(syndrome))

    stages = _zero_stages()
    stages["solve"] = 3 * problem.M + 2 * problem.N
    correction = np.zeros(problem.N, dtype=np.uint8)
    if h_s.mul_vec(x) != gf2.bits_to_int(syndrome):
        return _finish("unsolvable_fail", correction, stages)
    for t, j in enumerate(selected):
        correction[j] = (x >> t) & 1
    out = _finish("success", correction, stages)
    assert not np.any(problem.syndrome_of(correction) ^ syndrome)
    return out
