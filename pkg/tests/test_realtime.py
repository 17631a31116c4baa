"""Latency-tail analysis tests.

The analytic bound is exercised on its published operating points, the
ceiling arithmetic and monotonicity on grids, and the backlog simulator is
checked for dominance by the bound (it replays a looser model, so its mean
must sit below the analytic ceiling).
"""
import math

import numpy as np
import pytest

from rtdec import rng
from rtdec.realtime import (
    BacklogResult,
    LatencyHistogram,
    LatencyModel,
    MaxBlocksReport,
    epsilon_from_histogram,
    inserted_layers,
    max_blocks,
    simulate_backlog,
    tail_verdict,
)


def gross_model(epsilon=5e-5, c=10):
    return LatencyModel(t_ref=600, t_max=6000, t_gen=1000, epsilon=epsilon, c=c)


def test_model_validation():
    with pytest.raises(ValueError):
        LatencyModel(t_ref=1000, t_max=6000, t_gen=1000, epsilon=0.0)
    with pytest.raises(ValueError):
        LatencyModel(t_ref=600, t_max=900, t_gen=1000, epsilon=0.0)
    with pytest.raises(ValueError):
        LatencyModel(t_ref=0, t_max=6000, t_gen=1000, epsilon=0.0)
    with pytest.raises(ValueError):
        LatencyModel(t_ref=600, t_max=6000, t_gen=1000, epsilon=1.5)
    with pytest.raises(ValueError):
        LatencyModel(t_ref=600, t_max=6000, t_gen=1000, epsilon=0.0, c=0)


def test_gross_operating_point():
    verdict = tail_verdict(gross_model())
    assert verdict.l == 14
    assert abs(verdict.gamma - 0.007) < 1e-12
    assert verdict.satisfied
    expected = 1.6 + 0.014 / 0.993
    assert abs(verdict.slowdown_bound - expected) < 1e-12
    assert verdict.slowdown_bound < 1.62


def test_zero_epsilon_bound_is_exact_ratio():
    verdict = tail_verdict(gross_model(epsilon=0.0))
    assert verdict.gamma == 0.0
    assert verdict.slowdown_bound == 1.6


def test_bound_endpoints():
    # gamma = 0.5 adds exactly 2 to the zero-tail bound
    model = LatencyModel(t_ref=600, t_max=6000, t_gen=1000,
                         epsilon=0.5 / 14, c=1)
    verdict = tail_verdict(model)
    assert abs(verdict.gamma - 0.5) < 1e-12
    assert abs(verdict.slowdown_bound - 3.6) < 1e-12
    # gamma >= 1 is unsatisfied and unbounded
    bad = tail_verdict(LatencyModel(t_ref=600, t_max=6000, t_gen=1000,
                                    epsilon=0.01, c=10))
    assert bad.gamma >= 1.0
    assert not bad.satisfied
    assert bad.slowdown_bound == math.inf


def test_inserted_layers_ceiling_property():
    gen = rng.generator(7)
    for _ in range(300):
        t_ref = int(gen.integers(1, 2000))
        t_gen = t_ref + int(gen.integers(1, 2000))
        t_max = t_gen + int(gen.integers(1, 50000))
        l = inserted_layers(t_ref, t_max, t_gen)
        assert l * (t_gen - t_ref) >= t_max - t_ref
        assert (l - 1) * (t_gen - t_ref) < t_max - t_ref


def test_bound_monotonicity_grids():
    base = dict(t_ref=600, t_max=6000, t_gen=1000, epsilon=2e-4, c=10)

    def bound(**kw):
        return tail_verdict(LatencyModel(**{**base, **kw})).slowdown_bound

    eps_grid = [0.0, 1e-5, 1e-4, 5e-4, 2e-3]
    assert all(bound(epsilon=a) <= bound(epsilon=b)
               for a, b in zip(eps_grid, eps_grid[1:]))
    tmax_grid = [1500, 3000, 6000, 12000, 36160]
    assert all(bound(t_max=a) <= bound(t_max=b)
               for a, b in zip(tmax_grid, tmax_grid[1:]))
    c_grid = [1, 5, 10, 50, 200]
    assert all(bound(c=a) <= bound(c=b) for a, b in zip(c_grid, c_grid[1:]))
    tgen_grid = [700, 900, 1000, 2000, 5000]
    assert all(bound(t_gen=a) >= bound(t_gen=b)
               for a, b in zip(tgen_grid, tgen_grid[1:]))


def test_max_blocks_operating_points():
    report = max_blocks(t_ref=600, t_max=6000, t_gen=1000, epsilon=5e-5)
    assert report == MaxBlocksReport(14, 1428, 15, 1333)
    two_gross = max_blocks(t_ref=600, t_max=36160, t_gen=1000, epsilon=8e-5)
    assert two_gross.l == 89
    assert two_gross.c_max == 140
    assert two_gross.l_conservative == 90
    assert two_gross.c_max_conservative == 138


def test_max_blocks_zero_epsilon_unbounded():
    report = max_blocks(t_ref=600, t_max=6000, t_gen=1000, epsilon=0.0)
    assert report.c_max == math.inf
    assert report.c_max_conservative == math.inf


def test_max_blocks_strictness_property():
    gen = rng.generator(11)
    for _ in range(200):
        eps = float(gen.uniform(1e-6, 0.2))
        t_ref = int(gen.integers(1, 1000))
        t_gen = t_ref + int(gen.integers(1, 1000))
        t_max = t_gen + int(gen.integers(1, 20000))
        report = max_blocks(t_ref, t_max, t_gen, eps)
        for l, c in ((report.l, report.c_max),
                     (report.l_conservative, report.c_max_conservative)):
            assert c * eps * l < 1.0
            assert (c + 1) * eps * l >= 1.0


def test_histogram_validation_and_lookup():
    with pytest.raises(ValueError):
        LatencyHistogram(())
    with pytest.raises(ValueError):
        LatencyHistogram(((100.0, 0.5), (100.0, 0.6)))
    with pytest.raises(ValueError):
        LatencyHistogram(((100.0, 0.7), (200.0, 0.6)))
    with pytest.raises(ValueError):
        LatencyHistogram(((100.0, 0.5), (200.0, 1.1)))
    hist = LatencyHistogram(((100.0, 0.25), (200.0, 0.75), (400.0, 1.0)))
    assert hist.cumulative(100) == 0.25
    assert hist.cumulative(150) == 0.25
    assert hist.cumulative(200) == 0.75
    assert hist.cumulative(10_000) == 1.0
    with pytest.raises(ValueError):
        hist.cumulative(99)


def test_epsilon_examples():
    assert epsilon_from_histogram(LatencyHistogram(((500.0, 1.0),)), 500) == 0.0
    stepped = LatencyHistogram(((500.0, 0.99995), (6000.0, 1.0)))
    assert abs(epsilon_from_histogram(stepped, 500) - 5e-5) < 1e-12
    assert epsilon_from_histogram(stepped, 6000) == 0.0


def test_epsilon_matches_direct_recount():
    gen = rng.generator(23)
    samples = [float(v) for v in gen.integers(50, 2000, size=4000)]
    hist = LatencyHistogram.from_samples(samples)
    for t_ref in (min(samples), 137, 500, 1000.5, 1999, 2500):
        expected = sum(1 for v in samples if v > t_ref) / len(samples)
        assert abs(epsilon_from_histogram(hist, t_ref) - expected) < 1e-12


def test_histogram_csv_round_trip(tmp_path):
    hist = LatencyHistogram(((120.0, 0.5), (340.0, 0.875), (900.0, 1.0)))
    path = tmp_path / "latency.csv"
    with open(path, "w") as fp:
        fp.write("budget,cumulative_fraction\n")
        for b, f in hist.points:
            fp.write(f"{b},{f}\n")
    assert LatencyHistogram.from_csv(path) == hist


def test_simulate_zero_epsilon_exact():
    out = simulate_backlog(gross_model(epsilon=0.0), layers=1000, seed=3)
    assert out == BacklogResult(1.6, False, 1000, 0)


def test_simulate_certain_cascade_diverges():
    out = simulate_backlog(gross_model(epsilon=1.0), layers=100, seed=3)
    assert out.diverged
    assert out.mean_slowdown == math.inf


def test_simulate_determinism_and_slow_count():
    model = gross_model(epsilon=2e-3, c=5)
    a = simulate_backlog(model, layers=50_000, seed=9)
    b = simulate_backlog(model, layers=50_000, seed=9)
    assert a == b
    c = simulate_backlog(model, layers=50_000, seed=10)
    assert c != a
    # slow fraction tracks 1-(1-eps)^(2C) = ~2%
    assert 0.01 < a.slow_layers / a.layers < 0.03
    with pytest.raises(ValueError):
        simulate_backlog(model, layers=0, seed=1)


def test_simulated_mean_never_exceeds_bound():
    """Dominance is exact for the model's true mean; the empirical check is
    one-sided at 99% confidence because at small gamma the bound's slack is
    below a single run's sampling error."""
    cases = []
    for eps in (1e-4, 1e-3, 5e-3):
        for c in (1, 5, 20):
            model = LatencyModel(t_ref=600, t_max=6000, t_gen=1000,
                                 epsilon=eps, c=c)
            verdict = tail_verdict(model)
            if verdict.gamma <= 0.5:
                cases.append((model, verdict))
    assert len(cases) >= 6
    seeds = (101, 202, 303, 404, 505, 606, 707, 808)
    for model, verdict in cases:
        means = []
        for seed in seeds:
            out = simulate_backlog(model, layers=100_000, seed=seed)
            assert not out.diverged
            means.append(out.mean_slowdown)
            if verdict.gamma >= 0.2:
                # slack dwarfs noise here: every single run sits below
                assert out.mean_slowdown <= verdict.slowdown_bound
        pooled = float(np.mean(means))
        sem = float(np.std(means, ddof=1)) / math.sqrt(len(means))
        assert pooled <= verdict.slowdown_bound + 2.33 * sem


def test_simulate_histogram_mode_matches_two_point():
    # a histogram whose tail beyond t_ref is 2e-3 must reproduce the
    # two-point run with epsilon 2e-3 exactly (same draws, same seed)
    hist = LatencyHistogram(((600.0, 0.998), (6000.0, 1.0)))
    base = gross_model(epsilon=0.5, c=5)  # model epsilon ignored in this mode
    direct = simulate_backlog(gross_model(epsilon=2e-3, c=5),
                              layers=20_000, seed=77)
    via_hist = simulate_backlog(base, layers=20_000, seed=77, histogram=hist)
    assert math.isclose(via_hist.mean_slowdown, direct.mean_slowdown,
                        rel_tol=1e-12)
    assert via_hist.slow_layers == direct.slow_layers
