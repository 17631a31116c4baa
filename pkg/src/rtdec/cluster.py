"""Bitmap union-find decoding over the extended Tanner adjacency.

Every node (checks first, then faults) owns a fixed bit position, so a
cluster is one big integer: growth is an OR of adjacency columns, merging
is an overlap predicate plus an OR, and interior faults fall out of a
complement trick.  A fixed pool of cluster registers is managed by a FILO
queue of invalid clusters; each pop grows one cluster by a full neighbor
hop, absorbs everything it now touches, and re-checks whether its piece
of the syndrome became solvable on its interior faults.

Cycle model: OR-reduction trees finish in ceil(log6(k)) cycles for k
inputs, seed extraction isolates one bit per cycle per half, index
generation costs bucket_width cycles, submatrix extraction shifts once
per bitmap position up to the last live one, queue operations cost one
cycle each, and the existence/solution tests use the systolic solver
formulas (n + m - 1 when inconsistent, 3n + m - 1 when solvable).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from rtdec import gf2
from rtdec.gf2 import Gf2Matrix
from rtdec.problems import DecodingProblem

__all__ = [
    "UF_STAGES",
    "GROSS_SOLVER_SIZES",
    "TWO_GROSS_SOLVER_SIZES",
    "ExtendedAdjacency",
    "Cluster",
    "ClusterPool",
    "UfConfig",
    "UfOutcome",
    "PoolOverflow",
    "build_extended_adjacency",
    "map_predecoder",
    "extract_seed_bitmaps",
    "init_clusters",
    "grow",
    "merge_pass",
    "interior_faults",
    "check_validity",
    "decode",
]

UF_STAGES = ("predecode", "init", "grow", "merge", "interior", "extract",
             "existence", "solve", "queue")

GROSS_SOLVER_SIZES = ((18, 18), (18, 36), (36, 72), (72, 144), (144, 288))
TWO_GROSS_SOLVER_SIZES = GROSS_SOLVER_SIZES + ((288, 576), (576, 1152))


class PoolOverflow(Exception):
    """More seeds than cluster registers."""


def _log6_ceil(k: int) -> int:
    """Depth of a 6-ary OR-reduction tree over k inputs."""
    depth = 0
    span = 1
    while span < k:
        span *= 6
        depth += 1
    return depth


def _iter_bits(x: int):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


@dataclass(frozen=True)
class ExtendedAdjacency:
    """Symmetric adjacency with self-loops on M + N Tanner nodes.

    Column j is an (M+N)-bit int; checks occupy bits 0..M-1, fault f sits
    at bit M + f.
    """

    m: int
    n: int
    cols: tuple[int, ...]

    @property
    def size(self) -> int:
        return self.m + self.n

    @property
    def check_mask(self) -> int:
        return (1 << self.m) - 1

    @property
    def fault_mask(self) -> int:
        return ((1 << self.n) - 1) << self.m


def build_extended_adjacency(problem: DecodingProblem) -> ExtendedAdjacency:
    m, n = problem.M, problem.N
    cols = [1 << i for i in range(m + n)]
    for j in range(n):
        for i in problem.column_rows(j):
            cols[int(i)] |= 1 << (m + j)
            cols[m + j] |= 1 << int(i)
    return ExtendedAdjacency(m, n, tuple(cols))


@dataclass
class Cluster:
    bitmap: int = 0
    interior: int = 0   # N-bit, unshifted
    in_use: bool = False
    valid: bool = False


@dataclass
class ClusterPool:
    registers: list[Cluster]
    invalid_queue: list[int]
    solver_sizes: tuple[tuple[int, int], ...]

    @classmethod
    def sized(cls, n_clus: int, solver_sizes) -> "ClusterPool":
        return cls([Cluster() for _ in range(n_clus)], [], tuple(solver_sizes))

    def active_slots(self) -> list[int]:
        return [k for k, c in enumerate(self.registers) if c.in_use]


@dataclass(frozen=True)
class UfConfig:
    lambda_accept: float
    lambda_suspicious: float
    n_clus: int = 50
    solver_sizes: tuple[tuple[int, int], ...] = GROSS_SOLVER_SIZES
    bucket_width: int = 32

    def __post_init__(self):
        if self.lambda_accept > self.lambda_suspicious:
            raise ValueError("lambda_accept must not exceed lambda_suspicious")
        if self.n_clus < 1:
            raise ValueError("n_clus must be >= 1")
        if self.bucket_width < 1:
            raise ValueError("bucket_width must be >= 1")
        if not self.solver_sizes:
            raise ValueError("need at least one solver size")
        sizes = tuple(sorted((int(r), int(c)) for r, c in self.solver_sizes))
        if any(r < 1 or c < 1 for r, c in sizes):
            raise ValueError("solver sizes must be positive")
        object.__setattr__(self, "solver_sizes", sizes)


@dataclass(frozen=True)
class UfOutcome:
    status: str
    correction: np.ndarray
    cycles: int
    stage_cycles: dict[str, int] = field(compare=False)
    pool: Optional[ClusterPool] = field(default=None, compare=False)

    def __post_init__(self):
        assert self.status in ("success", "pool_overflow", "size_overflow",
                               "non_termination")
        assert self.cycles == sum(self.stage_cycles.values())


def map_predecoder(problem: DecodingProblem, syndrome, llrs, config: UfConfig
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split faults by confidence; returns (residual, erasures, partial)."""
    syndrome = np.asarray(syndrome, dtype=np.uint8)
    llrs = np.asarray(llrs, dtype=np.float64)
    if syndrome.shape != (problem.M,):
        raise ValueError("syndrome length mismatch")
    if llrs.shape != (problem.N,):
        raise ValueError("llr length mismatch")
    partial = (llrs <= config.lambda_accept).astype(np.uint8)
    erasures = ((llrs > config.lambda_accept)
                & (llrs <= config.lambda_suspicious)).astype(np.uint8)
    residual = syndrome ^ problem.syndrome_of(partial)
    return residual, erasures, partial


def extract_seed_bitmaps(b: int) -> list[int]:
    """Unit bitmaps of b, lowest bit first, via the carry isolation trick."""
    seeds = []
    while b:
        c = (~b) + 1
        d = b & c
        seeds.append(d)
        b ^= d
    return seeds


def init_clusters(residual_syndrome: int, erasures: int, pool: ClusterPool,
                  m: int) -> int:
    """Seed one unit cluster per set bit; returns the init cycle count.

    The check half and the fault half run through separate extractors in
    parallel, one seed per cycle each.
    """
    check_seeds = extract_seed_bitmaps(residual_syndrome)
    fault_seeds = extract_seed_bitmaps(erasures)
    total = len(check_seeds) + len(fault_seeds)
    if total > len(pool.registers):
        raise PoolOverflow(f"{total} seeds exceed {len(pool.registers)} registers")
    slot = 0
    for seed in check_seeds:
        pool.registers[slot] = Cluster(bitmap=seed, in_use=True)
        slot += 1
    for seed in fault_seeds:
        pool.registers[slot] = Cluster(bitmap=seed << m, in_use=True)
        slot += 1
    return max(len(check_seeds), len(fault_seeds))


def grow(cluster: Cluster, adjacency: ExtendedAdjacency) -> int:
    """One full neighbor hop: OR of adjacency columns selected by the bitmap."""
    out = 0
    for i in _iter_bits(cluster.bitmap):
        out |= adjacency.cols[i]
    cluster.bitmap = out
    return out


def merge_pass(pool: ClusterPool, grown_slot: int) -> list[int]:
    """Absorb every active cluster overlapping the grown one; returns the
    freed donor slots."""
    grown = pool.registers[grown_slot]
    merged = []
    for k, other in enumerate(pool.registers):
        if k == grown_slot or not other.in_use:
            continue
        if grown.bitmap & other.bitmap:
            grown.bitmap |= other.bitmap
            pool.registers[k] = Cluster()
            merged.append(k)
    return merged


def interior_faults(cluster: Cluster, adjacency: ExtendedAdjacency) -> int:
    """Faults in the cluster whose every check neighbor is also inside.

    Complement trick: OR the adjacency columns of the checks outside the
    cluster; any fault that shows up there has an outside neighbor.
    """
    s = cluster.bitmap & adjacency.check_mask
    t = cluster.bitmap & adjacency.fault_mask
    outside = ~s & adjacency.check_mask
    c = 0
    for i in _iter_bits(outside):
        c |= adjacency.cols[i]
    cluster.interior = ((~c & t) & adjacency.fault_mask) >> adjacency.m
    return cluster.interior


def _submatrix(problem: DecodingProblem, cluster: Cluster
               ) -> tuple[Gf2Matrix, list[int], list[int]]:
    """Rows = checks in the bitmap, columns = interior faults, both ascending."""
    checks = list(_iter_bits(cluster.bitmap & ((1 << problem.M) - 1)))
    faults = list(_iter_bits(cluster.interior))
    rank_of = {i: r for r, i in enumerate(checks)}
    rows = [0] * len(checks)
    for t, j in enumerate(faults):
        for i in problem.column_rows(j):
            r = rank_of.get(int(i))
            if r is not None:
                rows[r] |= 1 << t
    return Gf2Matrix(len(checks), len(faults), rows), checks, faults


def check_validity(cluster: Cluster, problem: DecodingProblem,
                   solver_sizes: Sequence[tuple[int, int]], residual: np.ndarray,
                   bucket_width: int = 32) -> tuple[str, int, int]:
    """Existence test of sigma|_G on the interior columns.

    Returns (verdict, extract_cycles, existence_cycles); verdict is one of
    valid / invalid / size_overflow.  Extraction bills the index buckets
    plus one shift per bitmap position up to the last live node.
    """
    sub, checks, _ = _submatrix(problem, cluster)
    extract_cycles = bucket_width + cluster.bitmap.bit_length()
    fits = any(r >= sub.m and c >= sub.n for r, c in solver_sizes)
    if not fits:
        return "size_overflow", extract_cycles, 0
    y = [int(residual[i]) for i in checks]
    if gf2.solve_existence(sub, y):
        cluster.valid = True
        return "valid", extract_cycles, max(3 * sub.n + sub.m - 1, 0)
    cluster.valid = False
    return "invalid", extract_cycles, max(sub.n + sub.m - 1, 0)


def decode(problem: DecodingProblem, syndrome, llrs, config: UfConfig,
           watch: Optional[Callable] = None) -> UfOutcome:
    """Full predecode / seed / grow / merge / solve pipeline.

    watch(event, pool, slot) is called after seeding and after each loop
    step; it exists for instrumentation and never affects the result.
    """
    adjacency = build_extended_adjacency(problem)
    hop = _log6_ceil(adjacency.size)
    stages = {name: 0 for name in UF_STAGES}
    residual, erasures, partial = map_predecoder(problem, syndrome, llrs, config)
    stages["predecode"] = 1

    pool = ClusterPool.sized(config.n_clus, config.solver_sizes)
    residual_bits = gf2.bits_to_int(residual)
    erasure_bits = gf2.bits_to_int(erasures)

    def finish(status: str, correction: np.ndarray) -> UfOutcome:
        return UfOutcome(status, correction, sum(stages.values()), stages, pool)

    try:
        stages["init"] = init_clusters(residual_bits, erasure_bits, pool, problem.M)
    except PoolOverflow:
        return finish("pool_overflow", partial.copy())

    for slot in pool.active_slots():
        cl = pool.registers[slot]
        interior_faults(cl, adjacency)
        stages["interior"] += hop
        verdict, ex_c, so_c = check_validity(cl, problem, pool.solver_sizes,
                                             residual, config.bucket_width)
        stages["extract"] += ex_c
        stages["existence"] += so_c
        if verdict == "size_overflow":
            return finish("size_overflow", partial.copy())
        if verdict == "invalid":
            pool.invalid_queue.append(slot)
            stages["queue"] += 1
    if watch is not None:
        watch("init", pool, None)

    while pool.invalid_queue:
        slot = pool.invalid_queue.pop()
        stages["queue"] += 1
        cl = pool.registers[slot]
        before = cl.bitmap
        active = len(pool.active_slots())
        grow(cl, adjacency)
        stages["grow"] += hop
        merged = merge_pass(pool, slot)
        stages["merge"] += (active - 1) * hop + len(merged)
        for donor in merged:
            if donor in pool.invalid_queue:
                pool.invalid_queue.remove(donor)
                stages["queue"] += 1
        interior_faults(cl, adjacency)
        stages["interior"] += hop
        verdict, ex_c, so_c = check_validity(cl, problem, pool.solver_sizes,
                                             residual, config.bucket_width)
        stages["extract"] += ex_c
        stages["existence"] += so_c
        if watch is not None:
            watch("step", pool, slot)
        if verdict == "size_overflow":
            return finish("size_overflow", partial.copy())
        if verdict == "invalid":
            if cl.bitmap == before:
                # growth fixed point: the component cannot explain sigma
                return finish("non_termination", partial.copy())
            pool.invalid_queue.append(slot)
            stages["queue"] += 1

    union = 0
    for slot in pool.active_slots():
        cl = pool.registers[slot]
        assert cl.valid
        sub, checks, faults = _submatrix(problem, cl)
        report = gf2.solve(sub, [int(residual[i]) for i in checks])
        assert report.solvable
        stages["solve"] += max(3 * sub.n + sub.m - 1, 0)
        for t, j in enumerate(faults):
            if (report.solution >> t) & 1:
                union |= 1 << j
    correction = partial.copy()
    for j in _iter_bits(union):
        correction[j] ^= 1
    if watch is not None:
        watch("final", pool, None)
    out = finish("success", correction)
    assert not np.any(problem.syndrome_of(correction)
                      ^ np.asarray(syndrome, dtype=np.uint8))
    return out
