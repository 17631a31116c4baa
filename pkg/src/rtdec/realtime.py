"""Latency-tail analysis for real-time decoding.

A decoder that usually finishes within t_ref cycles but occasionally takes
up to t_max forces idle layers into the logical schedule.  This module
computes the inserted-layer count L, the tail product gamma = epsilon*C*L,
the analytic mean-slowdown bound, and the largest block count C keeping
gamma below one.  A Monte Carlo simulator replays the pessimistic layered
model (two-point latency draws, geometric cascade segments) to check the
bound empirically.
"""
from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from rtdec import rng

__all__ = [
    "LatencyModel",
    "TailVerdict",
    "LatencyHistogram",
    "MaxBlocksReport",
    "BacklogResult",
    "tail_verdict",
    "epsilon_from_histogram",
    "max_blocks",
    "simulate_backlog",
]


def _ceil_ratio(num, den) -> int:
    ni, di = int(num), int(den)
    if ni == num and di == den:
        return -(-ni // di)
    return math.ceil(num / den)


def inserted_layers(t_ref, t_max, t_gen) -> int:
    """Idle layers needed to drain one worst-case decode: the smallest L
    with L*t_gen >= (L-1)*t_ref + t_max."""
    return _ceil_ratio(t_max - t_ref, t_gen - t_ref)


@dataclass(frozen=True)
class LatencyModel:
    t_ref: float
    t_max: float
    t_gen: float
    epsilon: float
    c: int = 1

    def __post_init__(self):
        if not 0 < self.t_ref < self.t_gen < self.t_max:
            raise ValueError("need 0 < t_ref < t_gen < t_max")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must be a probability")
        if self.c < 1:
            raise ValueError("need at least one code block")


@dataclass(frozen=True)
class TailVerdict:
    l: int
    gamma: float
    satisfied: bool
    slowdown_bound: float


def tail_verdict(model: LatencyModel) -> TailVerdict:
    """Inserted-layer count, tail product, and the mean-slowdown bound
    1 + t_ref/t_gen + 2*gamma/(1-gamma); unbounded when gamma >= 1."""
    l = inserted_layers(model.t_ref, model.t_max, model.t_gen)
    gamma = model.epsilon * model.c * l
    satisfied = model.t_ref < model.t_gen and gamma < 1.0
    if satisfied:
        bound = 1.0 + model.t_ref / model.t_gen + 2.0 * gamma / (1.0 - gamma)
    else:
        bound = math.inf
    return TailVerdict(l, gamma, satisfied, bound)


@dataclass(frozen=True)
class LatencyHistogram:
    """Cumulative completion fractions at sorted cycle budgets."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.points:
            raise ValueError("histogram needs at least one point")
        budgets = [b for b, _ in self.points]
        fractions = [f for _, f in self.points]
        if any(b2 <= b1 for b1, b2 in zip(budgets, budgets[1:])):
            raise ValueError("budgets must be strictly increasing")
        if any(f2 < f1 for f1, f2 in zip(fractions, fractions[1:])):
            raise ValueError("cumulative fractions must be non-decreasing")
        if fractions[0] < 0.0 or fractions[-1] > 1.0:
            raise ValueError("cumulative fractions must stay within [0, 1]")

    def cumulative(self, budget: float) -> float:
        budgets = [b for b, _ in self.points]
        k = bisect.bisect_right(budgets, budget)
        if k == 0:
            raise ValueError("budget below histogram domain")
        return self.points[k - 1][1]

    @classmethod
    def from_samples(cls, samples: Sequence[float]) -> "LatencyHistogram":
        ordered = sorted(samples)
        if not ordered:
            raise ValueError("no samples")
        total = len(ordered)
        points = []
        for k, v in enumerate(ordered, start=1):
            if k == total or ordered[k] != v:
                points.append((float(v), k / total))
        return cls(tuple(points))

    @classmethod
    def from_csv(cls, path) -> "LatencyHistogram":
        points = []
        with open(path, newline="") as fp:
            for row in csv.DictReader(fp):
                points.append((float(row["budget"]),
                               float(row["cumulative_fraction"])))
        return cls(tuple(points))


def epsilon_from_histogram(hist: LatencyHistogram, t_ref: float) -> float:
    """Tail probability beyond t_ref: one minus the completed fraction."""
    return 1.0 - hist.cumulative(t_ref)


@dataclass(frozen=True)
class MaxBlocksReport:
    l: int
    c_max: float
    l_conservative: int
    c_max_conservative: float


def _largest_c(epsilon: float, l: int) -> float:
    if epsilon == 0.0:
        return math.inf
    c = int(1.0 / (epsilon * l))
    while c > 0 and c * epsilon * l >= 1.0:
        c -= 1
    return c


def max_blocks(t_ref, t_max, t_gen, epsilon) -> MaxBlocksReport:
    """Largest block count with epsilon*C*L strictly below one.

    Also reports the same budget with one extra inserted layer (L+1), the
    more conservative schedule; both are returned so the margin is visible.
    """
    l = inserted_layers(t_ref, t_max, t_gen)
    return MaxBlocksReport(l, _largest_c(epsilon, l),
                           l + 1, _largest_c(epsilon, l + 1))


@dataclass(frozen=True)
class BacklogResult:
    mean_slowdown: float
    diverged: bool
    layers: int
    slow_layers: int


def simulate_backlog(model: LatencyModel, layers: int, seed: int,
                     histogram: Optional[LatencyHistogram] = None
                     ) -> BacklogResult:
    """Monte Carlo replay of the pessimistic layered schedule.

    Each logical layer (duration t_gen) carries 2C decode draws.  All fast:
    one baseline idle layer of t_ref follows.  Any slow: L idle layers of
    t_gen are inserted, and each cascade segment of L-1 idle layers spawns
    another with probability 1-(1-eps)^(C(L-1)) (geometric tail).  When a
    histogram is given, eps is its measured tail fraction beyond t_ref
    instead of the model's epsilon.  Returns total duration over
    layers*t_gen; a certain cascade continuation is reported as diverged.
    """
    if layers < 1:
        raise ValueError("need at least one layer")
    eps = model.epsilon if histogram is None \
        else epsilon_from_histogram(histogram, model.t_ref)
    l = inserted_layers(model.t_ref, model.t_max, model.t_gen)
    p_slow = 1.0 - (1.0 - eps) ** (2 * model.c)
    x_hat = 1.0 - (1.0 - eps) ** (model.c * (l - 1))
    if x_hat >= 1.0:
        return BacklogResult(math.inf, True, layers, 0)
    gen = rng.generator(seed)
    slow = gen.random(layers) < p_slow
    n_slow = int(slow.sum())
    duration = layers * model.t_gen
    duration += (layers - n_slow) * model.t_ref
    duration += n_slow * l * model.t_gen
    if n_slow and x_hat > 0.0:
        segments = gen.geometric(1.0 - x_hat, size=n_slow) - 1
        duration += int(segments.sum()) * (l - 1) * model.t_gen
    return BacklogResult(duration / (layers * model.t_gen), False,
                         layers, n_slow)
