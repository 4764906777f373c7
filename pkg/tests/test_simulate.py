"""Episode engine, Monte Carlo statistics, counterexample reproductions."""

import math

import numpy as np
import pytest

import searchgame as sg
from searchgame import ActivationParams
from searchgame.analytic import wait_first_active
from searchgame.simulate import EstimateReport
from searchgame.strategies import Policy, STAY


class TestEpisodes:
    def test_single_edge_full_activation(self):
        g = sg.RootedGraph(["a", "b"], [("e", "a", "b")], "a")
        params = ActivationParams.uniform(g, 1.0)
        hist = sg.simulate_episode(g, params, "e", sg.udfs(g), seed=0)
        assert hist.capture_stage == 1

    def test_two_edge_line_full_activation_distribution(self):
        # the uniform searcher finds the left edge at stage 1 or stage 3,
        # each with probability one half
        g = sg.line(1, 1)
        params = ActivationParams.uniform(g, 1.0)
        stages = [
            sg.simulate_episode(g, params, "L1", sg.udfs(g), seed=8, episode=i).capture_stage
            for i in range(4000)
        ]
        assert set(stages) == {1, 3}
        frac = sum(1 for s in stages if s == 1) / len(stages)
        assert abs(frac - 0.5) < 0.03
        assert np.mean(stages) == pytest.approx(2.0, abs=0.06)

    def test_determinism(self):
        g = sg.circle(4)
        params = ActivationParams.uniform(g, 0.5)
        a = sg.simulate_episode(g, params, "a2", sg.UESPolicy(g), seed=9, episode=3)
        b = sg.simulate_episode(g, params, "a2", sg.UESPolicy(g), seed=9, episode=3)
        assert a.stages == b.stages
        assert a.capture_stage == b.capture_stage
        c = sg.simulate_episode(g, params, "a2", sg.UESPolicy(g), seed=10, episode=3)
        assert a.stages != c.stages or a.capture_stage != c.capture_stage

    def test_histories_pass_audit(self):
        g = sg.parallel((2, 1, 1))
        params = ActivationParams.uniform(g, 0.4)
        pol = sg.ParallelUniformPolicy(g)
        for i in range(300):
            hist = sg.simulate_episode(g, params, "e1_2", pol, seed=4, episode=i)
            sg.validate_history(g, hist)

    def test_stage_cap_censors(self):
        class Staller(Policy):
            def actions(self, plan, v, visited, active):
                return [(STAY, 1.0)]

        g = sg.line(1, 1)
        params = ActivationParams.uniform(g, 0.5)
        hist = sg.simulate_episode(g, params, "L1", Staller(), seed=0, stage_cap=50)
        assert hist.censored and hist.capture_stage is None

    def test_audit_rejects_tampered_history(self):
        g = sg.line(1, 1)
        params = ActivationParams.uniform(g, 1.0)
        hist = sg.simulate_episode(g, params, "L1", sg.udfs(g), seed=2)
        hist.stages[-1] = (frozenset(), hist.stages[-1][1])  # crossing while inactive
        with pytest.raises(sg.GraphError):
            sg.validate_history(g, hist)


class TestMonteCarlo:
    def test_matches_exact_line(self):
        g = sg.line(3, 2)
        p = 0.5
        params = ActivationParams.uniform(g, p)
        eps = sg.ebd(g, p)
        rep = sg.monte_carlo(g, params, eps, sg.udfs(g), n=60_000, seed=21)
        expect = sg.closed_form_value("line", {"lam1": 3, "lam2": 2}, p).value
        assert abs(rep.mean - expect) <= 3 * rep.se

    def test_matches_exact_circle_full_activation(self):
        g = sg.circle(4)
        params = ActivationParams.uniform(g, 1.0)
        rep = sg.monte_carlo(
            g, params, sg.uniform_density(g), sg.UESPolicy(g), n=100_000, seed=5
        )
        assert abs(rep.mean - 2.5) <= 3 * rep.se

    def test_single_episode_report(self):
        g = sg.line(1, 1)
        params = ActivationParams.uniform(g, 1.0)
        rep = sg.monte_carlo(g, params, sg.uniform_density(g), sg.udfs(g), n=1, seed=0)
        assert rep.n == 1 and rep.se == 0.0
        assert rep.mean in (1.0, 3.0)

    def test_bit_identical_reports(self):
        g = sg.circle(3)
        params = ActivationParams.uniform(g, 0.6)
        kw = dict(n=500, seed=77)
        a = sg.monte_carlo(g, params, sg.uniform_density(g), sg.UESPolicy(g), **kw)
        b = sg.monte_carlo(g, params, sg.uniform_density(g), sg.UESPolicy(g), **kw)
        assert a == b

    def test_jobs_do_not_change_results(self):
        g = sg.circle(3)
        params = ActivationParams.uniform(g, 0.6)
        a = sg.monte_carlo(
            g, params, sg.uniform_density(g), sg.UESPolicy(g), n=400, seed=1, jobs=1
        )
        b = sg.monte_carlo(
            g, params, sg.uniform_density(g), sg.UESPolicy(g), n=400, seed=1, jobs=4
        )
        assert a == b

    def test_censoring_flagged(self):
        class Staller(Policy):
            def actions(self, plan, v, visited, active):
                return [(STAY, 1.0)]

        g = sg.line(1, 1)
        params = ActivationParams.uniform(g, 0.5)
        rep = sg.monte_carlo(
            g, params, sg.uniform_density(g), Staller(), n=5, seed=0, stage_cap=20
        )
        assert rep.censored == 5 and rep.biased

    def test_report_json_shape(self):
        rep = EstimateReport(mean=2.5, se=0.1, n=10, seed=3, censored=0)
        assert set(rep.to_json()) == {"mean", "se", "n", "seed", "censored"}


class TestTreeCounterexample:
    def test_negative_throughout(self):
        for p in (0.05, 0.25, 0.5, 0.75, 0.95):
            r = sg.tree_counterexample_check(p)
            assert r.difference < 0
            assert r.reference < 0

    def test_exact_continuation_payoffs(self):
        # both continuations have closed forms in the waiting expectations
        p = 0.3
        r = sg.tree_counterexample_check(p)
        g = sg.counterexample_tree()
        eps = sg.ebd(g, p)
        g1 = eps["e1p"] * (1 + 5 / p) + eps["e21"] * (1 + 12 / p)
        g2 = eps["e21"] * (1 + 1 / p) + eps["e1p"] * (1 + 8 / p)
        assert r.g1 == pytest.approx(g1, abs=1e-10)
        assert r.g2 == pytest.approx(g2, abs=1e-10)

    def test_sign_matches_reference_on_grid(self):
        for k in range(1, 21):
            p = k / 21.0
            r = sg.tree_counterexample_check(p)
            assert math.copysign(1, r.difference) == math.copysign(1, r.reference)

    def test_rejects_boundary(self):
        with pytest.raises(sg.GraphError):
            sg.tree_counterexample_check(1.0)


class TestEulerianCounterexample:
    def test_closed_forms(self):
        for p in (0.15, 0.4, 0.85):
            r = sg.eulerian_counterexample_check(p)
            q = wait_first_active(p, 2)
            assert r.g1 == pytest.approx((5 + 11 / p + 4 * q) / 5, abs=1e-10)
            assert r.g2 == pytest.approx((5 + 17 / (2 * p) + 8 * q) / 5, abs=1e-10)

    def test_sign_flips_at_two_fifths(self):
        assert sg.eulerian_counterexample_check(0.2).g2 < sg.eulerian_counterexample_check(0.2).g1
        assert abs(sg.eulerian_counterexample_check(0.4).g2 - sg.eulerian_counterexample_check(0.4).g1) <= 1e-12
        r = sg.eulerian_counterexample_check(0.8)
        assert r.g2 > r.g1

    def test_grid_signs(self):
        for p in (0.1, 0.3, 0.5, 0.7, 0.9, 1.0):
            r = sg.eulerian_counterexample_check(p)
            d = r.g2 - r.g1
            if abs(5 * p - 2) > 1e-12:
                assert math.copysign(1, d) == math.copysign(1, 5 * p - 2)


class TestMixedLengthPlanSpread:
    def test_fixed_priority_plans_differ_on_mixed_lengths(self):
        # with four paths of unequal lengths, fixed-priority Eulerian plans
        # give genuinely different payoffs against the uniform hider, so the
        # plan-for-plan equalization is scoped to two paths or equal lengths
        lams = (2, 1, 1, 2)
        g = sg.parallel(lams)
        params = ActivationParams.uniform(g, 0.3)
        ud = sg.uniform_density(g)
        ref = sg.parallel_edge_time(lams, 0.3)
        vals = [
            sg.hider_payoff(g, params, ud, pol)
            for pol in sg.enumerate_es_plans(g, limit=24)
        ]
        assert max(vals) - min(vals) > 0.05
        # the behavioral uniform searcher still equalizes every edge
        t = sg.policy_hitting_times(g, params, sg.UESPolicy(g))
        assert max(abs(v - ref) for v in t.values()) < 1e-9
