"""Message-passing decoders: min-sum BP, BP with decaying memory, relay legs.

Messages live on the Tanner-graph edges of the decoding matrix and are
updated on a flooding schedule: every check-to-fault message, then every
fault-to-check message, once per iteration.  Priors are log((1-p)/p), so
an unlikely fault has a positive prior and the hard decision is F_j = 1
iff the marginal is negative (ties resolve to 0).  Message magnitudes
saturate at MESSAGE_CAP to emulate fixed-point hardware; the min over an
empty set (degree-1 checks) is the cap, and the empty sign product is +1.

The memory variant replaces the fixed prior with
lam_j(t) = (1-gamma_j) lam_j(0) + gamma_j Lambda_j(t-1), so gamma_j = 0
recovers plain min-sum and gamma_j = 1 feeds back the previous marginal.
A relay chains memory legs: each new leg restarts the messages from the
previous leg's terminal marginals and draws fresh per-fault gammas.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from rtdec.problems import DecodingProblem
from rtdec.rng import substream

__all__ = [
    "MESSAGE_CAP",
    "TannerGraph",
    "BpState",
    "MpOutcome",
    "LegSpec",
    "RelayConfig",
    "minsum_bp",
    "dmem_bp_leg",
    "relay",
    "relay_cycles",
    "gross_relay_config",
    "two_gross_relay_config",
]

MESSAGE_CAP = 64.0


class TannerGraph:
    """Edge-indexed view of a decoding matrix for flooding updates.

    Edges are numbered in column order (all edges of fault 0, then fault 1,
    ...); by_check gathers them into check order for the check-node pass.
    """

    def __init__(self, problem: DecodingProblem):
        self.problem = problem
        deg = np.diff(problem.h_indptr)
        self.edge_fault = np.repeat(np.arange(problem.N, dtype=np.int64), deg)
        self.edge_check = problem.h_rows.astype(np.int64)
        self.fault_indptr = problem.h_indptr
        check_deg = np.bincount(self.edge_check, minlength=problem.M)
        if problem.M and int(check_deg.min()) == 0:
            raise ValueError("decoding matrix has an all-zero row")
        self.by_check = np.argsort(self.edge_check, kind="stable")
        self.check_indptr = np.concatenate([[0], np.cumsum(check_deg)])
        self.check_of_sorted = self.edge_check[self.by_check]
        self.fault_of_sorted = self.edge_fault[self.by_check]
        self.E = int(self.edge_fault.size)


class BpState:
    """Mutable per-decode state: edge messages, priors, marginals.

    llrs overrides the initial marginals (and with them the leg-local
    prior and the initial fault-to-check messages) for leg chaining.
    """

    def __init__(self, source: Union[DecodingProblem, TannerGraph],
                 llrs: Optional[np.ndarray] = None):
        self.graph = source if isinstance(source, TannerGraph) else TannerGraph(source)
        problem = self.graph.problem
        init = problem.priors() if llrs is None else np.array(llrs, dtype=np.float64)
        if init.shape != (problem.N,):
            raise ValueError("initial marginals must have one entry per fault")
        self.lam0 = init.copy()
        self.lam = init.copy()
        self.llrs = init.copy()
        self.v = init[self.graph.edge_fault].copy()
        self.u = np.zeros(self.graph.E)
        self.iteration = 0


@dataclass(frozen=True)
class MpOutcome:
    """Decode attempt result; llrs are the final marginals."""

    converged: bool
    correction: np.ndarray
    llrs: np.ndarray
    iterations: int
    legs_used: int = 1


@dataclass(frozen=True)
class LegSpec:
    """One relay leg: either a constant memory strength or a per-fault
    i.i.d. uniform draw from gamma_range."""

    T: int
    gamma0: Optional[float] = None
    gamma_range: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("leg iteration budget must be >= 1")
        if (self.gamma0 is None) == (self.gamma_range is None):
            raise ValueError("specify exactly one of gamma0 / gamma_range")
        if self.gamma_range is not None and self.gamma_range[0] > self.gamma_range[1]:
            raise ValueError("empty gamma interval")

    def gammas(self, n: int, seed: int, index: int) -> np.ndarray:
        if self.gamma0 is not None:
            return np.full(n, self.gamma0)
        lo, hi = self.gamma_range
        return substream(seed, index).uniform(lo, hi, n)


@dataclass(frozen=True)
class RelayConfig:
    legs: tuple[LegSpec, ...]
    seed: int = 0
    solutions: int = 1

    def __post_init__(self):
        if not self.legs:
            raise ValueError("need at least one leg")
        if self.solutions != 1:
            raise ValueError("only single-solution relays are supported")

    @property
    def max_iterations(self) -> int:
        return sum(leg.T for leg in self.legs)


def gross_relay_config(seed: int = 0) -> RelayConfig:
    """Benchmark relay for the 144-qubit bicycle code: one guided leg, then
    299 legs with per-fault gammas from [-0.24, 0.66]."""
    legs = (LegSpec(T=80, gamma0=0.125),) + tuple(
        LegSpec(T=60, gamma_range=(-0.24, 0.66)) for _ in range(299)
    )
    return RelayConfig(legs=legs, seed=seed)


def two_gross_relay_config(seed: int = 0) -> RelayConfig:
    """Benchmark relay for the 288-qubit bicycle code: one guided leg plus
    300 sampled legs."""
    legs = (LegSpec(T=80, gamma0=0.125),) + tuple(
        LegSpec(T=60, gamma_range=(-0.24, 0.66)) for _ in range(300)
    )
    return RelayConfig(legs=legs, seed=seed)


def relay_cycles(iterations: int, alpha: int = 2) -> int:
    """FPGA cycles for an iteration count at alpha cycles per iteration."""
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    if iterations < 0:
        raise ValueError("negative iteration count")
    return alpha * iterations


def _check_messages(graph: TannerGraph, v: np.ndarray, syn_sign: np.ndarray) -> np.ndarray:
    """Check-to-fault pass: signed exclusive minimum per check."""
    vc = v[graph.by_check]
    mag = np.abs(vc)
    sgn = np.where(vc < 0.0, -1.0, 1.0)
    starts = graph.check_indptr[:-1]
    min1 = np.minimum.reduceat(mag, starts)
    pos = np.arange(graph.E)
    cand = np.where(mag == min1[graph.check_of_sorted], pos, graph.E)
    first = np.minimum.reduceat(cand, starts)
    mag2 = mag.copy()
    mag2[first] = np.inf
    min2 = np.minimum.reduceat(mag2, starts)
    excl = np.where(pos == first[graph.check_of_sorted],
                    min2[graph.check_of_sorted], min1[graph.check_of_sorted])
    prod = np.multiply.reduceat(sgn, starts)
    u_sorted = syn_sign[graph.check_of_sorted] * prod[graph.check_of_sorted] * sgn \
        * np.minimum(excl, MESSAGE_CAP)
    u = np.empty_like(u_sorted)
    u[graph.by_check] = u_sorted
    return u


def _syndrome_satisfied(graph: TannerGraph, hard: np.ndarray, syndrome: np.ndarray) -> bool:
    par = np.add.reduceat(hard[graph.fault_of_sorted].astype(np.int64),
                          graph.check_indptr[:-1]) & 1
    return bool(np.array_equal(par, syndrome))


def _run_leg(state: BpState, syndrome: np.ndarray, gammas: np.ndarray, T: int) -> MpOutcome:
    graph = state.graph
    problem = graph.problem
    syndrome = np.asarray(syndrome, dtype=np.int64)
    if syndrome.shape != (problem.M,):
        raise ValueError("syndrome length mismatch")
    gam = np.broadcast_to(np.asarray(gammas, dtype=np.float64), (problem.N,))
    syn_sign = np.where(syndrome == 1, -1.0, 1.0)
    for t in range(1, T + 1):
        lam_t = (1.0 - gam) * state.lam0 + gam * state.llrs
        u = _check_messages(graph, state.v, syn_sign)
        llrs = lam_t + np.add.reduceat(u, graph.fault_indptr[:-1])
        v = llrs[graph.edge_fault] - u
        np.clip(v, -MESSAGE_CAP, MESSAGE_CAP, out=v)
        state.lam = lam_t
        state.u = u
        state.llrs = llrs
        state.v = v
        state.iteration += 1
        hard = llrs < 0.0
        if _syndrome_satisfied(graph, hard, syndrome):
            correction = hard.astype(np.uint8)
            assert not np.any(problem.syndrome_of(correction) ^ syndrome)
            return MpOutcome(True, correction, llrs.copy(), t)
    return MpOutcome(False, (state.llrs < 0.0).astype(np.uint8), state.llrs.copy(), T)


def minsum_bp(problem: DecodingProblem, syndrome, max_iters: int,
              graph: Optional[TannerGraph] = None) -> MpOutcome:
    """Plain min-sum decoding with fixed priors; halts on matched syndrome."""
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    state = BpState(graph if graph is not None else problem)
    return _run_leg(state, syndrome, np.zeros(problem.N), max_iters)


def dmem_bp_leg(state: BpState, syndrome, gammas, T: int) -> MpOutcome:
    """One memory leg on an existing state; mutates the state in place."""
    if T < 1:
        raise ValueError("T must be >= 1")
    return _run_leg(state, syndrome, gammas, T)


def relay(problem: DecodingProblem, syndrome, config: RelayConfig,
          graph: Optional[TannerGraph] = None) -> MpOutcome:
    """Chain memory legs until one converges, restarting messages from the
    previous leg's terminal marginals."""
    graph = graph if graph is not None else TannerGraph(problem)
    total = 0
    llrs: Optional[np.ndarray] = None
    out = None
    for r, leg in enumerate(config.legs):
        state = BpState(graph, llrs=llrs)
        gam = leg.gammas(problem.N, config.seed, r)
        out = dmem_bp_leg(state, syndrome, gam, leg.T)
        total += out.iterations
        llrs = out.llrs
        if out.converged:
            return MpOutcome(True, out.correction, out.llrs, total, r + 1)
    return MpOutcome(False, out.correction, out.llrs, total, len(config.legs))
