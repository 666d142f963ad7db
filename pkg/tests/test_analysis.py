import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import sweep_at
from pctsim import analysis
from pctsim.analysis import (
    anchor_repeats,
    block_regen_time,
    check_coarse_bound,
    coarse_length,
    coarse_length_inverse,
    dominating_process,
    hidden_regeneration,
    rescaled_trace,
    return_time_statistics,
    spontaneous_anchor_time,
    spontaneous_trace,
    summability_terms,
    visible_regeneration,
)
from pctsim.cftp import construct_window, simulate, simulate_naive
from pctsim.errors import AbortedError
from pctsim.model import INF, Alphabet, ContextTreeModel, LengthFn, TransitionRules
from pctsim.randsrc import FixedTrace, SeededSource

F = Fraction


def table_reach_model(values, eps="0.2", tail=None):
    ab = Alphabet(("2", "1"), 1)
    return ContextTreeModel(
        ab, (0,), LengthFn("table", (), tuple(values), tail),
        TransitionRules(F(eps), (), (), (F(eps), 1 - F(eps))),
    )


class TestSpontaneousTrace:
    def test_all_stars(self, fig_model):
        tr = FixedTrace({i: 0.9 for i in range(5)})
        st = spontaneous_trace(tr, 0, 4, fig_model)
        assert all(st.z[i] is None for i in range(5))
        assert all(st.ref_dist[i] is INF for i in range(5))
        assert all(st.need[i] is INF for i in range(5))

    def test_distance_and_need_after_one_occurrence(self, sweep_template):
        # reference symbol spontaneous at -3: at i = 0 the distance is 2 and
        # the needed length is 2 + 1 + reach(2) = 5 for the identity reach
        tr = FixedTrace({-3: 0.1, -2: 0.9, -1: 0.9, 0: 0.9})
        st = spontaneous_trace(tr, -3, 0, sweep_template)
        assert st.z[-3] == 0
        assert st.ref_dist[0] == 2
        assert st.need[0] == 5

    def test_six_letter_reference_block_layout(self):
        # one spontaneous occurrence of a six-letter reference word, aligned
        # with block 2 (sites 7..12); distances read off at later sites
        ab = Alphabet(("a", "b", "c"), 3)
        m = ContextTreeModel(
            ab, (0, 1, 2, 0, 1, 2), LengthFn("zero"),
            TransitionRules(F("0.1"), (), (), (F("0.4"), F("0.3"), F("0.3"))),
        )
        u = {i: 0.9 for i in range(1, 37)}
        for off, val in enumerate((0.05, 0.15, 0.25, 0.05, 0.15, 0.25)):
            u[7 + off] = val
        tr = FixedTrace(u)
        st = spontaneous_trace(tr, 1, 36, m)
        assert st.ref_dist[15] == 2
        assert st.ref_dist[18] == 5
        rt = rescaled_trace(tr, 1, 6, m)
        assert rt.one == {1: False, 2: True, 3: False, 4: False, 5: False, 6: False}
        assert rt.ref_dist[6] == 3
        assert rt.ref_dist[3] == 0


class TestCoarseLength:
    def test_tabulated_values(self, w3_model):
        assert [coarse_length(w3_model, i) for i in range(3)] == [1, 2, 4]

    def test_zero_reach(self, renewal):
        assert all(coarse_length(renewal, i) == 0 for i in range(6))

    def test_identity_single_symbol(self, sweep_template):
        assert [coarse_length(sweep_template, i) for i in range(6)] == list(range(6))

    def test_inverse_values(self, w3_model, renewal, sweep_template):
        assert coarse_length_inverse(w3_model, 0) == 1
        assert coarse_length_inverse(w3_model, 1) == 1
        assert coarse_length_inverse(w3_model, 2) == 2
        assert coarse_length_inverse(w3_model, 3) == 2
        assert coarse_length_inverse(w3_model, 10) is INF  # block reach tops out at 4
        assert all(coarse_length_inverse(renewal, i) is INF for i in range(5))
        assert [coarse_length_inverse(sweep_template, i) for i in range(5)] == [1, 2, 3, 4, 5]


class TestBlockRegenTime:
    def test_all_reference_blocks(self, sweep_template):
        tr = FixedTrace({i: 0.1 for i in range(-1, 6)})
        assert block_regen_time(tr, 5, sweep_template, max_back=10) == 0

    def test_single_late_bound(self):
        # reach table [8]: one non-spontaneous site at 5 needs length 9,
        # pinning the start to -4
        m = table_reach_model([8])
        u = {i: 0.1 for i in range(-12, 10)}
        u[5] = 0.9
        tr = FixedTrace(u)
        assert block_regen_time(tr, 9, m, max_back=20) == -4

    def test_aborted(self, sweep_template):
        tr = FixedTrace({i: 0.9 for i in range(-40, 6)})
        with pytest.raises(AbortedError):
            block_regen_time(tr, 5, sweep_template, max_back=30)


def _w3_worked_trace():
    """Blocks -12..-8 spell the reference word spontaneously, everything
    after is non-spontaneous except one misaligned occurrence at sites
    -6..-4.  Worked by hand: the block-level start is -12, the bound
    3*(-12-1)+1 = -38, and the site-level regeneration time is exactly -38
    because sites -15..-7 still need the tabulated reach of 12 behind the
    old occurrence."""
    u = {}
    spell = (0.05, 0.25, 0.45)  # symbols a, b, c with epsilon = 0.2
    for i in range(-38, 7):
        u[i] = 0.95
    for b in range(-12, -7):
        for t in range(3):
            u[3 * b - 2 + t] = spell[t]
    for off, t in enumerate(range(-6, -3)):
        u[t] = spell[off]
    return FixedTrace(u)


class TestCoarseBound:
    def test_worked_three_letter_trace(self, w3_model):
        tr = _w3_worked_trace()
        assert block_regen_time(tr, 2, w3_model, max_back=40) == -12
        rep = check_coarse_bound(tr, 2, w3_model, max_back=60)
        assert rep.block_theta == -12
        assert rep.bound == -38
        assert rep.theta == -38
        assert rep.holds
        # spot checks: constructible exactly from the bound, not later
        assert construct_window(tr, -38, 6, w3_model).ok
        assert not construct_window(tr, -37, 6, w3_model).ok
        wit = construct_window(tr, -26, 6, w3_model)
        assert not wit.ok and wit.fail_index == -21

    def test_epsilon_one_is_trivial(self):
        m = sweep_at(1)
        src = SeededSource(3)
        rep = check_coarse_bound(src, 4, m, max_back=10)
        assert rep.theta == 0 and rep.block_theta == 0 and rep.holds

    def test_holds_across_seeds(self):
        m = sweep_at("0.3")
        for seed in range(2000):
            rep = check_coarse_bound(SeededSource(seed), 4, m, max_back=10 ** 6)
            assert rep.holds, seed


class TestDominatingProcess:
    def test_growth_without_resets(self, sweep_template):
        tr = FixedTrace({i: 0.1 for i in range(1, 7)})  # all reference blocks
        dp = dominating_process(tr, 0, 6, sweep_template)
        assert dp.values == (0, 1, 2, 3, 4, 5, 6)

    def test_single_reset(self):
        # needs (0, 0, 5) at blocks 1..3: two reference blocks then a star
        # whose needed length 5 comes from reach table [4]
        m = table_reach_model([4])
        tr = FixedTrace({1: 0.1, 2: 0.1, 3: 0.9})
        dp = dominating_process(tr, 0, 3, m)
        assert dp.values == (0, 1, 2, 0)

    def test_monotone_and_coalescing(self, w3_model):
        for seed in range(200):
            src = SeededSource(seed)
            procs = {o: dominating_process(src, o, 50, w3_model) for o in (-13, -11, -8)}
            for i in range(-13, 51):
                assert procs[-13].value(i) >= procs[-11].value(i) >= procs[-8].value(i)
            origins = sorted(procs)
            for ni, n in enumerate(origins):
                for mm in origins[ni:]:
                    for i in range(mm, 51):
                        if procs[n].value(i) == 0:
                            for k in range(i, 51):
                                assert procs[n].value(k) == procs[mm].value(k)
                            break


class TestReturnTimeStatistics:
    def test_epsilon_one_never_returns(self):
        stats = return_time_statistics(sweep_at(1), seeds=500, horizon=20)
        assert np.all(stats.u_hat == 0) and np.all(stats.f_hat == 0)

    def test_first_return_mass(self):
        stats = return_time_statistics(sweep_at("0.3"), seeds=30_000, horizon=30)
        # a non-reference first block returns immediately
        assert abs(stats.f_hat[0] - 0.7) <= 4 * stats.f_se[0] + 1e-12

    def test_renewal_equation_residuals(self):
        stats = return_time_statistics(sweep_at("0.3"), seeds=30_000, horizon=30)
        assert stats.max_residual_ratio() <= 5.0

    def test_matches_scalar_dominating_process(self, w3_model):
        stats = return_time_statistics(w3_model, seeds=64, horizon=25, seed_base=500)
        u = np.zeros(25)
        for seed in range(500, 564):
            dp = dominating_process(SeededSource(seed), 0, 25, w3_model)
            u += np.array([dp.value(k) == 0 for k in range(1, 26)], dtype=float)
        assert np.allclose(stats.u_hat, u / 64)

    def test_summability_terms(self, sweep_template, renewal):
        terms = summability_terms(sweep_template, 6)
        assert terms == pytest.approx([0.8 ** (i + 1) for i in range(6)])
        assert summability_terms(renewal, 6) == [0.0] * 6


class TestHiddenRegeneration:
    def test_epsilon_one_flags_everything(self):
        m = sweep_at(1)
        rep = hidden_regeneration(SeededSource(0), 0, 20, 10, m)
        assert rep.hidden_times == tuple(range(21))

    def test_flag_set_shrinks_with_horizon(self, fig_model):
        for seed in range(40):
            src = SeededSource(seed)
            small = set(hidden_regeneration(src, 0, 30, 3, fig_model).hidden_times)
            large = set(hidden_regeneration(src, 0, 30, 12, fig_model).hidden_times)
            assert large <= small

    def test_renewal_gap_consistency(self, renewal):
        src = SeededSource(5)
        rep = hidden_regeneration(src, 0, 4000, 6, renewal)
        rate = len(rep.hidden_times) / 4001
        mean_gap = sum(rep.gaps) / len(rep.gaps)
        assert abs(1 / mean_gap - rate) < 0.02
        assert abs(rate - 0.2) < 0.03


class TestAnchorRepeats:
    def test_values(self, sweep_template, w3_model, renewal):
        assert anchor_repeats(sweep_template) == 1  # identity reach, reach(0) = 0
        assert anchor_repeats(w3_model) == 2
        assert anchor_repeats(renewal) == 1


class TestVisibleRegeneration:
    def test_renewal_anchors_are_reference_positions(self, renewal):
        for seed in range(10):
            r = simulate(SeededSource(seed), 0, 300, renewal)
            rep = visible_regeneration(r.sample, r.theta, renewal)
            expect = tuple(
                r.theta + off for off, s in enumerate(r.sample) if s == 0
            )
            assert rep.visible_times == expect
            assert rep.theta_x == r.theta  # sample starts at a regeneration

    def test_no_reference_run_no_anchor(self, renewal):
        sample = (1, 1, 1, 1, 1)
        rep = visible_regeneration(sample, 0, renewal)
        assert rep.visible_times == () and rep.theta_x is None

    def test_anchor_blocks_partition_the_sample(self, renewal):
        r = simulate(SeededSource(4), 0, 120, renewal)
        rep = visible_regeneration(r.sample, r.theta, renewal)
        assert sum(len(b) for b in rep.blocks) == len(r.sample) - (
            rep.visible_times[0] - r.theta
        )
        for i, a in enumerate(rep.visible_times[:-1]):
            assert rep.gaps[i] == rep.visible_times[i + 1] - a

    def test_identity_reach_anchors_are_strict_subset(self):
        m = sweep_at("0.3")
        anchors = refs = 0
        for seed in range(100):
            r = simulate(SeededSource(seed), 0, 200, m)
            rep = visible_regeneration(r.sample, r.theta, m)
            pos = {r.theta + off for off, s in enumerate(r.sample) if s == 0}
            assert set(rep.visible_times) <= pos
            anchors += len(rep.visible_times)
            refs += len(pos)
        assert anchors < refs

    def test_every_anchor_starts_a_reference_run(self, w3_model):
        span = anchor_repeats(w3_model) * 3
        target = w3_model.ref * anchor_repeats(w3_model)
        for seed in range(12):
            r = simulate(SeededSource(seed), 0, 150, w3_model, max_back=10 ** 6)
            rep = visible_regeneration(r.sample, r.theta, w3_model)
            for k in rep.visible_times:
                off = k - r.theta
                assert r.sample[off : off + span] == target


class TestSpontaneousAnchorTime:
    def test_immediate_anchor(self):
        m = sweep_at("0.3")
        tr = FixedTrace({i: 0.1 for i in range(0, 9)})
        assert spontaneous_anchor_time(tr, 8, m, max_back=5) == 0

    def test_aborted_without_any_run(self):
        m = sweep_at("0.3")
        tr = FixedTrace({i: 0.95 for i in range(-30, 9)})
        with pytest.raises(AbortedError):
            spontaneous_anchor_time(tr, 8, m, max_back=20)

    def test_anchor_is_visible_on_the_sample(self):
        m = sweep_at("0.3")
        for seed in range(60):
            src = SeededSource(seed)
            k = spontaneous_anchor_time(src, 12, m, max_back=10 ** 6)
            r = simulate(src, k, 12, m, max_back=10 ** 6)
            rep = visible_regeneration(r.sample[k - r.theta :], k, m)
            assert rep.theta_x == k
            assert k in rep.visible_times
