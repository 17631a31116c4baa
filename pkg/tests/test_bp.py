"""Message-passing decoder tests.

The repetition-code oracle enumerates all 2^d fault patterns and computes
the exact bitwise posterior, so it is independent of the decoder under
test.  Memory legs are checked against the update rule replayed by hand.
"""
import math

import numpy as np
import pytest

from rtdec import rng
from rtdec.bp import (
    MESSAGE_CAP,
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
from rtdec.problems import (
    build_bb_code_problem,
    build_repetition_problem,
    make_problem,
    sample_faults,
)

GROSS = (12, 6, ((3, 0), (0, 1), (0, 2)), ((0, 3), (1, 0), (2, 0)))


def two_fault_problem():
    """Single check over two faults with p = (0.2, 0.1)."""
    return make_problem("pair", 1, 2, 1, [[0], [0]], [[0], [0]], [0.2, 0.1])


def triangle_problem(p=0.1):
    """Three faults on a 3-cycle; checks f0+f1, f1+f2, f0+f2.

    The all-ones syndrome is outside the column space, so no decoder can
    ever satisfy it: handy for forcing full iteration budgets.
    """
    h = [[0, 2], [0, 1], [1, 2]]
    return make_problem("tri", 3, 3, 1, h, [[0], [], []], [p, p, p])


def exhaustive_bitwise_map(problem, syndrome):
    """Exact per-bit MAP over all fault patterns matching the syndrome."""
    n = problem.N
    weight_one = np.zeros(n)
    weight_zero = np.zeros(n)
    found = False
    for pattern in range(1 << n):
        bits = np.array([(pattern >> j) & 1 for j in range(n)], dtype=np.uint8)
        if np.any(problem.syndrome_of(bits) ^ syndrome):
            continue
        found = True
        w = np.prod(np.where(bits == 1, problem.p, 1.0 - problem.p))
        weight_one += np.where(bits == 1, w, 0.0)
        weight_zero += np.where(bits == 0, w, 0.0)
    assert found, "syndrome has no matching pattern"
    assert not np.any(weight_one == weight_zero), "bitwise MAP tie"
    return (weight_one > weight_zero).astype(np.uint8)


def test_hand_example_single_check():
    problem = two_fault_problem()
    out = minsum_bp(problem, [1], 10)
    assert out.converged
    assert out.iterations == 1
    assert out.legs_used == 1
    assert list(out.correction) == [1, 0]
    assert abs(out.llrs[0] - (-0.811)) < 1e-3
    assert abs(out.llrs[1] - 0.811) < 1e-3
    # hand values of the priors feeding that marginal
    assert abs(problem.priors()[0] - 1.386) < 1e-3
    assert abs(problem.priors()[1] - 2.197) < 1e-3


def test_zero_syndrome_converges_immediately():
    for problem in (two_fault_problem(), build_repetition_problem(7, 0.05),
                    build_bb_code_problem(*GROSS, p_err=0.01)):
        out = minsum_bp(problem, np.zeros(problem.M, dtype=np.uint8), 5)
        assert out.converged
        assert out.iterations == 1
        assert not out.correction.any()


def test_repetition_matches_exhaustive_map():
    problem = build_repetition_problem(5, 0.1)
    gen = rng.generator(20260817)
    seen = set()
    for _ in range(100):
        faults = (gen.random(problem.N) < 0.25).astype(np.uint8)
        syndrome = problem.syndrome_of(faults)
        seen.add(tuple(int(b) for b in syndrome))
        out = minsum_bp(problem, syndrome, 100)
        assert out.converged
        expect = exhaustive_bitwise_map(problem, syndrome)
        assert np.array_equal(out.correction, expect), (faults, syndrome)
    assert len(seen) > 10


def test_converged_correction_always_matches_syndrome():
    problem = build_bb_code_problem(*GROSS, p_err=0.02)
    for trial in range(50):
        _, syndrome = sample_faults(problem, 1000 + trial)
        out = minsum_bp(problem, syndrome, 30)
        hard = (out.llrs < 0.0).astype(np.uint8)
        assert np.array_equal(hard, out.correction)
        if out.converged:
            assert np.array_equal(problem.syndrome_of(out.correction), syndrome)


def test_unsatisfiable_syndrome_never_converges():
    problem = triangle_problem()
    out = minsum_bp(problem, [1, 1, 1], 40)
    assert not out.converged
    assert out.iterations == 40


def test_degree_one_check_uses_cap():
    problem = make_problem("lone", 1, 1, 1, [[0]], [[0]], [0.2])
    out = minsum_bp(problem, [1], 5)
    assert out.converged
    assert list(out.correction) == [1]
    assert abs(out.llrs[0] - (math.log(4.0) - MESSAGE_CAP)) < 1e-9


def test_messages_saturate_at_cap():
    # chained marginals can exceed the cap; in-flight messages must not
    problem = triangle_problem()
    state = BpState(problem, llrs=np.array([300.0, -300.0, 300.0]))
    dmem_bp_leg(state, [1, 1, 1], np.zeros(3), 1)
    assert np.max(np.abs(state.v)) == MESSAGE_CAP
    assert np.max(np.abs(state.u)) == MESSAGE_CAP
    dmem_bp_leg(state, [1, 1, 1], np.zeros(3), 10)
    assert np.max(np.abs(state.v)) <= MESSAGE_CAP
    assert np.max(np.abs(state.u)) <= MESSAGE_CAP


def test_zero_gamma_leg_is_plain_minsum():
    problem = triangle_problem()
    syndrome = [1, 1, 1]
    for T in (1, 2, 3, 7, 20):
        ref = minsum_bp(problem, syndrome, T)
        state = BpState(problem)
        leg = dmem_bp_leg(state, syndrome, np.zeros(problem.N), T)
        assert leg.converged == ref.converged
        assert leg.iterations == ref.iterations
        assert np.max(np.abs(leg.llrs - ref.llrs)) <= 1e-12
        assert np.array_equal(leg.correction, ref.correction)


def test_full_gamma_feeds_back_previous_marginals():
    problem = triangle_problem()
    syndrome = [1, 1, 1]
    one = np.ones(problem.N)
    s1 = BpState(problem)
    out1 = dmem_bp_leg(s1, syndrome, one, 1)
    s2 = BpState(problem)
    dmem_bp_leg(s2, syndrome, one, 2)
    assert np.max(np.abs(s2.lam - out1.llrs)) <= 1e-12


def test_half_gamma_prior_is_midpoint():
    problem = triangle_problem()
    syndrome = [1, 1, 1]
    half = np.full(problem.N, 0.5)
    s1 = BpState(problem)
    out1 = dmem_bp_leg(s1, syndrome, half, 1)
    s2 = BpState(problem)
    dmem_bp_leg(s2, syndrome, half, 2)
    midpoint = 0.5 * problem.priors() + 0.5 * out1.llrs
    assert np.max(np.abs(s2.lam - midpoint)) <= 1e-9


def test_negative_gamma_is_legal():
    problem = triangle_problem()
    state = BpState(problem)
    out = dmem_bp_leg(state, [1, 1, 1], np.full(problem.N, -0.2), 5)
    assert out.iterations == 5
    assert np.isfinite(out.llrs).all()


def test_relay_single_leg_matches_dmem():
    problem = build_repetition_problem(5, 0.1)
    syndrome = problem.syndrome_of(np.array([1, 0, 0, 0, 0], dtype=np.uint8))
    config = RelayConfig(legs=(LegSpec(T=80, gamma0=0.125),), seed=3)
    out = relay(problem, syndrome, config)
    state = BpState(problem)
    ref = dmem_bp_leg(state, syndrome, np.full(problem.N, 0.125), 80)
    assert out.converged and ref.converged
    assert out.legs_used == 1
    assert out.iterations == ref.iterations
    assert np.array_equal(out.correction, ref.correction)
    assert np.max(np.abs(out.llrs - ref.llrs)) == 0.0


def test_relay_exhausts_legs_on_unsatisfiable_syndrome():
    problem = triangle_problem()
    legs = tuple(LegSpec(T=4, gamma_range=(-0.24, 0.66)) for _ in range(3))
    config = RelayConfig(legs=legs, seed=11)
    out = relay(problem, [1, 1, 1], config)
    assert not out.converged
    assert out.legs_used == 3
    assert out.iterations == 12


def test_relay_recovers_cases_plain_bp_misses():
    problem = build_bb_code_problem(*GROSS, p_err=0.05)
    legs = (LegSpec(T=4, gamma0=0.125),) + tuple(
        LegSpec(T=60, gamma_range=(-0.24, 0.66)) for _ in range(30)
    )
    config = RelayConfig(legs=legs, seed=5)
    multi = 0
    for trial in range(60):
        _, syndrome = sample_faults(problem, 500 + trial)
        out = relay(problem, syndrome, config)
        if out.converged:
            assert np.array_equal(problem.syndrome_of(out.correction), syndrome)
            if out.legs_used > 1:
                multi += 1
                assert out.iterations > 4
        assert out.iterations <= config.max_iterations
    assert multi > 0, "no trial needed more than one leg; weaken p or legs"


def test_relay_is_deterministic():
    problem = build_bb_code_problem(*GROSS, p_err=0.05)
    _, syndrome = sample_faults(problem, 509)
    legs = (LegSpec(T=4, gamma0=0.125),) + tuple(
        LegSpec(T=20, gamma_range=(-0.24, 0.66)) for _ in range(10)
    )
    config = RelayConfig(legs=legs, seed=5)
    a = relay(problem, syndrome, config)
    b = relay(problem, syndrome, config)
    assert a.converged == b.converged
    assert a.legs_used == b.legs_used
    assert a.iterations == b.iterations
    assert np.array_equal(a.correction, b.correction)
    assert np.array_equal(a.llrs, b.llrs)


def test_leg_gamma_draws():
    leg = LegSpec(T=60, gamma_range=(-0.24, 0.66))
    a = leg.gammas(1000, seed=9, index=4)
    b = leg.gammas(1000, seed=9, index=4)
    c = leg.gammas(1000, seed=9, index=5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert a.min() >= -0.24 and a.max() <= 0.66
    const = LegSpec(T=10, gamma0=0.125).gammas(7, seed=0, index=0)
    assert np.array_equal(const, np.full(7, 0.125))


def test_benchmark_relay_configs():
    g = gross_relay_config()
    assert len(g.legs) == 300
    assert g.legs[0] == LegSpec(T=80, gamma0=0.125)
    assert all(leg == LegSpec(T=60, gamma_range=(-0.24, 0.66)) for leg in g.legs[1:])
    assert g.max_iterations == 18020
    tg = two_gross_relay_config()
    assert len(tg.legs) == 301
    assert tg.max_iterations == 18080


def test_relay_cycles():
    assert relay_cycles(80, 2) == 160
    assert relay_cycles(18080, 2) == 36160
    assert relay_cycles(0, 3) == 0
    with pytest.raises(ValueError):
        relay_cycles(10, 0)
    with pytest.raises(ValueError):
        relay_cycles(-1, 2)


def test_validation_errors():
    problem = two_fault_problem()
    with pytest.raises(ValueError):
        minsum_bp(problem, [1], 0)
    with pytest.raises(ValueError):
        minsum_bp(problem, [1, 0], 5)
    with pytest.raises(ValueError):
        LegSpec(T=0, gamma0=0.1)
    with pytest.raises(ValueError):
        LegSpec(T=5)
    with pytest.raises(ValueError):
        LegSpec(T=5, gamma0=0.1, gamma_range=(0.0, 0.1))
    with pytest.raises(ValueError):
        LegSpec(T=5, gamma_range=(0.5, 0.1))
    with pytest.raises(ValueError):
        RelayConfig(legs=())
    with pytest.raises(ValueError):
        RelayConfig(legs=(LegSpec(T=1, gamma0=0.0),), solutions=2)
    with pytest.raises(ValueError):
        BpState(problem, llrs=np.zeros(3))
    zero_row = make_problem("zr", 2, 2, 1, [[0], [0]], [[0], []], [0.1, 0.1])
    with pytest.raises(ValueError):
        TannerGraph(zero_row)


def test_erasure_prior_is_zero_and_decodable():
    # p = 1/2 erases fault 0; the degree-1 check pins it down anyway
    problem = make_problem("er", 2, 2, 1, [[0, 1], [0]], [[0], []], [0.5, 0.1])
    assert problem.priors()[0] == 0.0
    out = minsum_bp(problem, [1, 1], 20)
    assert out.converged
    assert list(out.correction) == [1, 0]
