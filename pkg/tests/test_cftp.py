"""The naive scan-and-replay route is the definitional oracle; the
backward-forward route must match it seed for seed, including step counts
and provenance."""

import pytest

from conftest import sweep_at
from pctsim.cftp import construct_window, regen_time, sample_stationary, simulate, simulate_naive
from pctsim.errors import AbortedError
from pctsim.oracle import geometric_test
from pctsim.randsrc import FixedTrace, SeededSource


class TestConstructWindow:
    def test_all_spontaneous(self, fig_model):
        tr = FixedTrace({0: 0.05, 1: 0.25, 2: 0.1})
        wit = construct_window(tr, 0, 2, fig_model)
        assert wit.ok and wit.sample == (0, 1, 0)

    def test_fails_immediately_on_non_spontaneous_start(self, fig_model):
        tr = FixedTrace({0: 0.5, 1: 0.1})
        wit = construct_window(tr, 0, 1, fig_model)
        assert not wit.ok and wit.fail_index == 0

    def test_renewal_resolves_everything_after_one_anchor(self, renewal):
        # one spontaneous reference symbol, then arbitrary non-spontaneous draws
        tr = FixedTrace({0: 0.1, 1: 0.9, 2: 0.3, 3: 0.77, 4: 0.21})
        wit = construct_window(tr, 0, 4, renewal)
        assert wit.ok
        assert wit.sample[0] == 0  # the reference symbol


class TestWorkedTrace:
    """Hand-simulated realization on the explicit-rules model.

    Sites -3..2 with u = (.30, .95, .25, .45, .05, .55): the first forward
    attempt stalls at 0; the anchor at -1 constructs 0 and 1 but 2 needs a
    length-5 context; the anchor at -3 resolves everything.  Worked by hand
    against the interval layout: theta = -3, sample 2 2 2 1 1 1, and
    9 = (2 - 0 + 1) + 2 * (0 - (-3)) steps.
    """

    TRACE = {-3: 0.30, -2: 0.95, -1: 0.25, 0: 0.45, 1: 0.05, 2: 0.55}

    def test_both_algorithms_reproduce_the_hand_run(self, fig_model):
        for fn in (simulate, simulate_naive):
            r = fn(FixedTrace(self.TRACE), 0, 2, fig_model, max_back=10)
            assert r.theta == -3
            assert r.word(fig_model) == "222111"
            assert r.steps == 9
            assert r.provenance == {-3: 0, -2: 1, -1: 0, 0: 1, 1: 0, 2: 5}

    def test_definitional_scan(self, fig_model):
        assert regen_time(FixedTrace(self.TRACE), 0, 2, fig_model, max_back=10) == -3


class TestEquivalence:
    def test_fig_model_many_seeds(self, fig_model):
        for seed in range(300):
            src = SeededSource(seed)
            a = simulate(src, 0, 9, fig_model)
            b = simulate_naive(src, 0, 9, fig_model)
            assert (a.theta, a.sample, a.steps) == (b.theta, b.sample, b.steps)
            assert a.provenance == b.provenance

    def test_three_letter_model(self, w3_model):
        # deep regeneration here makes the naive oracle cubic; keep it small
        for seed in range(40):
            src = SeededSource(seed)
            a = simulate(src, -2, 4, w3_model)
            b = simulate_naive(src, -2, 4, w3_model)
            assert (a.theta, a.sample) == (b.theta, b.sample)

    def test_step_identity(self, fig_model):
        for seed in range(200):
            r = simulate(SeededSource(seed), 3, 11, fig_model)
            assert r.steps == (11 - 3 + 1) + 2 * (3 - r.theta)


class TestRegenTime:
    def test_epsilon_one_never_looks_back(self):
        model = sweep_at(1)
        for seed in range(50):
            r = simulate(SeededSource(seed), 0, 5, model)
            assert r.theta == 0
            assert r.steps == 6

    def test_geometric_backward_distance(self, renewal):
        dists = [-simulate(SeededSource(s), 0, 0, renewal).theta for s in range(20_000)]
        rep = geometric_test(dists, 0.2)
        assert rep.passed, (rep.statistic, rep.critical)

    def test_window_monotonicity(self, fig_model):
        for seed in range(150):
            src = SeededSource(seed)
            thetas = [simulate(src, 0, n, fig_model).theta for n in (0, 3, 6, 9)]
            assert all(a >= b for a, b in zip(thetas, thetas[1:]))

    def test_spontaneous_provenance(self, fig_model):
        for seed in range(100):
            src = SeededSource(seed)
            r = simulate(src, 0, 6, fig_model)
            for i in range(r.theta, 7):
                assert (src.u_at(i) < 0.4) == (r.provenance[i] == 0)

    def test_aborted(self, fig_model):
        tr = FixedTrace({i: 0.99 for i in range(-8, 3)})
        with pytest.raises(AbortedError):
            simulate(tr, 0, 2, fig_model, max_back=5)
        with pytest.raises(AbortedError):
            simulate_naive(tr, 0, 2, fig_model, max_back=5)


class TestStationarity:
    def test_marginal_frequency_on_renewal(self, renewal):
        # constant return probability makes the chain i.i.d. with P(ref) = 0.4
        r = sample_stationary(SeededSource(11), 0, 30_000, renewal)
        freq = sum(1 for s in r.window() if s == 0) / 30_001
        se = (0.4 * 0.6 / 30_001) ** 0.5
        assert abs(freq - 0.4) <= 4 * se

    def test_shift_invariance(self, fig_model):
        n = 8000
        a = sum(simulate(SeededSource(s), 0, 0, fig_model).window()[0] for s in range(n))
        b = sum(
            simulate(SeededSource(10_000_000 + s), 0, 5, fig_model).window()[5]
            for s in range(n)
        )
        pa, pb = a / n, b / n
        pool = (a + b) / (2 * n)
        se = (pool * (1 - pool) * 2 / n) ** 0.5
        assert abs(pa - pb) <= 4 * se
