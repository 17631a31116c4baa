"""Ordered-statistics pipeline tests.

Stage cycle formulas are checked against little step-counting loops that
consume elements the way the hardware ports would; solver billing is
checked against the instrumented systolic run.
"""
import math

import numpy as np
import pytest

from rtdec import gf2, rng
from rtdec.bp import TannerGraph, minsum_bp
from rtdec.gf2 import Gf2Matrix
from rtdec.osd import (
    STAGES,
    OsdConfig,
    RankedList,
    extract_and_zero_filter,
    filter_and_rank,
    filtered_osd,
    standard_osd,
)
from rtdec.problems import (
    build_bb_code_problem,
    build_repetition_problem,
    make_problem,
    sample_faults,
    stack_phenomenological,
)

GROSS = (12, 6, ((3, 0), (0, 1), (0, 2)), ((0, 3), (1, 0), (2, 0)))


def random_problem(gen, m, n):
    """Random decoding problem with nonempty columns."""
    cols = []
    for _ in range(n):
        deg = int(gen.integers(1, m + 1))
        cols.append(sorted(int(i) for i in gen.choice(m, size=deg, replace=False)))
    return make_problem("rand", m, n, 1, cols, [[0]] + [[] for _ in range(n - 1)],
                        [0.05] * n)


def count_banked(n, lanes):
    cycles = 0
    done = 0
    while done < n:
        done += lanes
        cycles += 1
    return cycles


def test_filter_and_rank_example():
    cfg = OsdConfig(lambda_confident=10.0, r_max=3)
    ranked, filter_c, sort_c = filter_and_rank([3.2, 1.1, 2.0], cfg)
    assert ranked.entries == ((1.1, 1), (2.0, 2), (3.2, 0))
    assert not ranked.overflowed
    assert sort_c == 3
    assert filter_c == count_banked(3, 2 * cfg.banking)


def test_filter_cycles_at_scale():
    cfg = OsdConfig(lambda_confident=-1.0, banking=8)
    _, filter_c, _ = filter_and_rank(np.ones(26208), cfg)
    assert filter_c == 1638
    assert filter_c == count_banked(26208, 16)


def test_filter_ties_break_by_index():
    cfg = OsdConfig(lambda_confident=5.0, r_max=10)
    ranked, _, _ = filter_and_rank([2.0, 1.0, 2.0, 1.0], cfg)
    assert ranked.indices() == [1, 3, 0, 2]


def test_filter_overflow_flag():
    cfg = OsdConfig(lambda_confident=10.0, r_max=2)
    ranked, _, _ = filter_and_rank([1.0, 2.0, 3.0], cfg)
    assert ranked.overflowed
    assert len(ranked.entries) == 3  # full list retained for inspection


def test_overflow_bills_filter_only():
    problem = build_repetition_problem(5, 0.1)
    cfg = OsdConfig(lambda_confident=100.0, r_max=2)
    out = filtered_osd(problem, np.zeros(4, dtype=np.uint8), np.ones(5), cfg)
    assert out.status == "overflow_fail"
    assert out.stage_cycles["filter"] == math.ceil(5 / 16)
    assert all(out.stage_cycles[s] == 0 for s in STAGES if s != "filter")
    assert out.cycles == out.stage_cycles["filter"]
    assert not out.correction.any()


def test_empty_survivor_list():
    problem = build_repetition_problem(5, 0.1)
    cfg = OsdConfig(lambda_confident=-100.0, r_max=10)
    zero = np.zeros(4, dtype=np.uint8)
    out = filtered_osd(problem, zero, np.ones(5), cfg)
    assert out.status == "success"
    assert not out.correction.any()
    fired = np.array([1, 0, 0, 0], dtype=np.uint8)
    out2 = filtered_osd(problem, fired, np.ones(5), cfg)
    assert out2.status == "unsolvable_fail"
    assert out2.stage_cycles["solve"] == 0


def test_extract_deletes_zero_rows():
    # both survivor columns touch only check 1 of 3
    problem = make_problem("mid", 3, 2, 1, [[1], [1]], [[0], []], [0.1, 0.1])
    cfg = OsdConfig(lambda_confident=10.0, r_max=5)
    ranked, _, _ = filter_and_rank([1.0, 2.0], cfg)
    reduced, kept, extract_c, zf_c = extract_and_zero_filter(problem, ranked, cfg)
    assert kept == [1]
    assert reduced.to_lists() == [[1, 1]]
    assert extract_c == math.ceil(2 / 2)
    assert zf_c == math.ceil(3 / cfg.zero_filter_blocks)


def test_extract_follows_ranked_order():
    gen = rng.generator(41)
    problem = random_problem(gen, 6, 5)
    cfg = OsdConfig(lambda_confident=10.0, r_max=10)
    fwd = RankedList(((0.1, 0), (0.2, 3), (0.3, 4)), False)
    rev = RankedList(tuple(reversed(fwd.entries)), False)
    a, kept_a, _, _ = extract_and_zero_filter(problem, fwd, cfg)
    b, kept_b, _, _ = extract_and_zero_filter(problem, rev, cfg)
    assert kept_a == kept_b
    for t in range(3):
        assert a.column_int(t) == b.column_int(2 - t)
    with pytest.raises(ValueError):
        extract_and_zero_filter(problem, RankedList(((1.0, 0),), True), cfg)


def test_zero_filter_preserves_semantics():
    """Deleting all-zero rows never changes the verdict or the solution."""
    gen = rng.generator(99)
    for _ in range(40):
        r = int(gen.integers(1, 5))
        m_live = int(gen.integers(1, 5))
        live = [int(gen.integers(1, 1 << r)) for _ in range(m_live)]
        # interleave genuine zero rows
        rows = []
        live_pos = []
        for row in live:
            while gen.random() < 0.4:
                rows.append(0)
            live_pos.append(len(rows))
            rows.append(row)
        full = Gf2Matrix(len(rows), r, rows)
        kept = Gf2Matrix(m_live, r, live)
        for y_full in range(1 << full.m):
            y_bits = gf2.int_to_bits(y_full, full.m)
            rep_full = gf2.solve(full, y_bits)
            deleted_hot = any(b for i, b in enumerate(y_bits) if i not in live_pos)
            if deleted_hot:
                assert not rep_full.solvable
                continue
            rep_kept = gf2.solve(kept, [y_bits[i] for i in live_pos])
            assert rep_full.solvable == rep_kept.solvable
            if rep_full.solvable:
                assert rep_full.solution == rep_kept.solution


def test_syndrome_on_deleted_row_fails_fast():
    problem = build_repetition_problem(3, 0.1)
    # only fault 0 survives; check 1 has no surviving column
    llrs = np.array([0.5, 50.0, 50.0])
    cfg = OsdConfig(lambda_confident=10.0, r_max=5)
    out = filtered_osd(problem, np.array([0, 1], dtype=np.uint8), llrs, cfg)
    assert out.status == "unsolvable_fail"
    assert out.stage_cycles["solve"] == 0
    assert out.stage_cycles["unpermute"] == 0
    assert out.stage_cycles["zero_filter"] == math.ceil(2 / cfg.zero_filter_blocks)


def test_unsolvable_inside_solver():
    problem = build_repetition_problem(3, 0.1)
    # only the middle fault survives; it touches both checks
    llrs = np.array([50.0, 0.5, 50.0])
    cfg = OsdConfig(lambda_confident=10.0, r_max=5)
    out = filtered_osd(problem, np.array([1, 0], dtype=np.uint8), llrs, cfg)
    assert out.status == "unsolvable_fail"
    assert out.stage_cycles["solve"] == 2 + 1 - 1
    assert out.stage_cycles["unpermute"] == 0


def test_simple_identity_decode():
    problem = make_problem("eye", 2, 2, 1, [[0], [1]], [[0], []], [0.1, 0.1])
    cfg = OsdConfig(lambda_confident=10.0, r_max=5)
    out = filtered_osd(problem, [1, 0], np.zeros(2), cfg)
    assert out.status == "success"
    assert list(out.correction) == [1, 0]


def test_survivor_superset_always_succeeds():
    """When the true support survives filtering a solution must exist."""
    gen = rng.generator(17)
    for _ in range(500):
        m = int(gen.integers(2, 8))
        n = int(gen.integers(2, 10))
        problem = random_problem(gen, m, n)
        faults = (gen.random(n) < 0.3).astype(np.uint8)
        syndrome = problem.syndrome_of(faults)
        llrs = np.full(n, 100.0)
        llrs[faults == 1] = -1.0
        extra = gen.random(n) < 0.2
        llrs[extra] = 0.5
        cfg = OsdConfig(lambda_confident=50.0, r_max=n)
        out = filtered_osd(problem, syndrome, llrs, cfg)
        assert out.status == "success"
        assert np.array_equal(problem.syndrome_of(out.correction), syndrome)
        survivors = set(np.flatnonzero(llrs < 50.0))
        assert set(np.flatnonzero(out.correction)) <= survivors


def test_correction_matches_solver_permutation():
    """Inverse permutation writes solver bit t to fault index R[t], once."""
    gen = rng.generator(23)
    for _ in range(100):
        m = int(gen.integers(2, 7))
        n = int(gen.integers(2, 9))
        problem = random_problem(gen, m, n)
        llrs = gen.normal(0.0, 3.0, n)
        faults = (gen.random(n) < 0.3).astype(np.uint8)
        syndrome = problem.syndrome_of(faults)
        cfg = OsdConfig(lambda_confident=2.0, r_max=n)
        out = filtered_osd(problem, syndrome, llrs, cfg)
        if out.status != "success":
            continue
        ranked, _, _ = filter_and_rank(llrs, cfg)
        idx = ranked.indices()
        assert len(set(idx)) == len(idx)
        reduced, kept, _, _ = extract_and_zero_filter(problem, ranked, cfg)
        rep = gf2.solve(reduced, [int(syndrome[i]) for i in kept])
        bits = rep.solution_bits()
        for t, j in enumerate(idx):
            assert out.correction[j] == bits[t]
        off = set(range(n)) - set(idx)
        assert not out.correction[sorted(off)].any() if off else True


def test_systolic_engine_matches_formula_billing():
    gen = rng.generator(31)
    seen_unsolvable = 0
    for _ in range(50):
        m = int(gen.integers(2, 7))
        n = int(gen.integers(2, 9))
        problem = random_problem(gen, m, n)
        llrs = gen.normal(0.0, 3.0, n)
        syndrome = (gen.random(m) < 0.4).astype(np.uint8)
        base = OsdConfig(lambda_confident=2.0, r_max=n)
        sim = OsdConfig(lambda_confident=2.0, r_max=n, use_systolic_sim=True)
        a = filtered_osd(problem, syndrome, llrs, base)
        b = filtered_osd(problem, syndrome, llrs, sim)
        assert a.status == b.status
        assert a.cycles == b.cycles
        assert a.stage_cycles == b.stage_cycles
        assert np.array_equal(a.correction, b.correction)
        if a.status == "unsolvable_fail":
            seen_unsolvable += 1
    assert seen_unsolvable > 5


def test_stage_cycle_formulas_match_step_counts():
    gen = rng.generator(57)
    for _ in range(30):
        m = int(gen.integers(2, 9))
        n = int(gen.integers(2, 12))
        problem = random_problem(gen, m, n)
        llrs = gen.normal(0.0, 3.0, n)
        faults = (gen.random(n) < 0.3).astype(np.uint8)
        syndrome = problem.syndrome_of(faults)
        cfg = OsdConfig(lambda_confident=2.0, r_max=n, zero_filter_blocks=3)
        out = filtered_osd(problem, syndrome, llrs, cfg)
        assert out.cycles == sum(out.stage_cycles.values())
        r = len(filter_and_rank(llrs, cfg)[0].entries)
        assert out.stage_cycles["filter"] == count_banked(n, 2 * cfg.banking)
        assert out.stage_cycles["sort"] == r
        assert out.stage_cycles["extract"] == count_banked(r, 2)
        assert out.stage_cycles["zero_filter"] == count_banked(m, 3)
        if out.status == "success":
            assert out.stage_cycles["unpermute"] == count_banked(r, 2)


def test_padded_timing_bills_capacity():
    problem = build_repetition_problem(5, 0.1)
    llrs = np.array([0.5, 0.5, 50.0, 50.0, 50.0])
    syndrome = problem.syndrome_of(np.array([1, 1, 0, 0, 0], dtype=np.uint8))
    actual = OsdConfig(lambda_confident=10.0, r_max=4)
    padded = OsdConfig(lambda_confident=10.0, r_max=4, padded_timing=True)
    a = filtered_osd(problem, syndrome, llrs, actual)
    b = filtered_osd(problem, syndrome, llrs, padded)
    assert a.status == b.status == "success"
    assert np.array_equal(a.correction, b.correction)
    assert a.stage_cycles["sort"] == 2 and b.stage_cycles["sort"] == 4
    assert a.stage_cycles["extract"] == 1 and b.stage_cycles["extract"] == 2
    assert a.stage_cycles["unpermute"] == b.stage_cycles["unpermute"] == 1
    assert a.stage_cycles["solve"] == b.stage_cycles["solve"]


def test_zero_row_share_is_high_on_bp_failures():
    base = build_bb_code_problem(*GROSS, p_err=0.03)
    pheno = stack_phenomenological(base, rounds=3, p_meas=0.03)
    graph = TannerGraph(pheno)
    fractions = []
    for trial in range(60):
        _, syndrome = sample_faults(pheno, 9000 + trial)
        out = minsum_bp(pheno, syndrome, 10, graph=graph)
        if out.converged:
            continue
        cfg = OsdConfig(lambda_confident=1.0, r_max=500)
        ranked, _, _ = filter_and_rank(out.llrs, cfg)
        assert not ranked.overflowed
        _, kept, _, _ = extract_and_zero_filter(pheno, ranked, cfg)
        fractions.append(1.0 - len(kept) / pheno.M)
    assert len(fractions) > 20
    assert float(np.mean(fractions)) >= 0.5


def test_standard_osd_cycle_count_at_scale():
    m, n = 936, 8784
    cols = [[j % m] for j in range(n)]
    problem = make_problem("flat", m, n, 1, cols, [[0]] + [[] for _ in range(n - 1)],
                           [0.01] * n)
    out = standard_osd(problem, np.zeros(m, dtype=np.uint8), np.arange(n, dtype=float))
    assert out.status == "success"
    assert out.cycles == 3 * m + 2 * n == 20376


def test_standard_osd_decodes_any_reachable_syndrome():
    gen = rng.generator(73)
    for _ in range(200):
        m = int(gen.integers(2, 7))
        n = int(gen.integers(2, 9))
        problem = random_problem(gen, m, n)
        faults = (gen.random(n) < 0.4).astype(np.uint8)
        syndrome = problem.syndrome_of(faults)
        llrs = gen.normal(0.0, 2.0, n)
        out = standard_osd(problem, syndrome, llrs)
        assert out.status == "success"
        assert np.array_equal(problem.syndrome_of(out.correction), syndrome)


def test_standard_osd_rejects_unreachable_syndrome():
    # both columns equal: image is {00, 11}
    problem = make_problem("dup", 2, 2, 1, [[0, 1], [0, 1]], [[0], []], [0.1, 0.1])
    out = standard_osd(problem, [1, 0], [0.0, 1.0])
    assert out.status == "unsolvable_fail"
    assert not out.correction.any()


def test_filtered_and_standard_agree_on_soundness():
    gen = rng.generator(83)
    both = 0
    for _ in range(200):
        m = int(gen.integers(2, 7))
        n = int(gen.integers(3, 10))
        problem = random_problem(gen, m, n)
        faults = (gen.random(n) < 0.3).astype(np.uint8)
        syndrome = problem.syndrome_of(faults)
        llrs = gen.normal(0.0, 3.0, n)
        cfg = OsdConfig(lambda_confident=2.0, r_max=n)
        f = filtered_osd(problem, syndrome, llrs, cfg)
        s = standard_osd(problem, syndrome, llrs)
        assert s.status == "success"
        if f.status == "success":
            both += 1
            assert np.array_equal(problem.syndrome_of(f.correction), syndrome)
            assert np.array_equal(problem.syndrome_of(s.correction), syndrome)
    assert both > 50


def test_config_validation():
    with pytest.raises(ValueError):
        OsdConfig(lambda_confident=1.0, r_max=0)
    with pytest.raises(ValueError):
        OsdConfig(lambda_confident=1.0, banking=0)
    with pytest.raises(ValueError):
        OsdConfig(lambda_confident=1.0, zero_filter_blocks=0)
    with pytest.raises(ValueError):
        OsdConfig(lambda_confident=1.0, osd_mode="osd-k")
    problem = build_repetition_problem(3, 0.1)
    cfg = OsdConfig(lambda_confident=1.0)
    with pytest.raises(ValueError):
        filtered_osd(problem, [0], np.zeros(3), cfg)
    with pytest.raises(ValueError):
        filtered_osd(problem, [0, 0], np.zeros(2), cfg)
    with pytest.raises(ValueError):
        standard_osd(problem, [0], np.zeros(3))
