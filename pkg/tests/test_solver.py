"""Best responses, hitting times, and certified value brackets."""

import math

import numpy as np
import pytest

import searchgame as sg
from searchgame import ActivationParams
from searchgame.solver import UNREACHABLE, CoverageError, best_response_value
from searchgame.strategies import Policy, STAY


class TestBestResponse:
    def test_single_edge_geometric(self):
        g = sg.RootedGraph(["a", "b"], [("e", "a", "b")], "a")
        for p in (0.2, 0.5, 1.0):
            br = best_response_value(g, ActivationParams.uniform(g, p), {"e": 1.0})
            assert br.value == pytest.approx(1.0 / p, abs=1e-10)
            assert br.residual <= 1e-9

    def test_two_edge_line_full_activation(self):
        g = sg.line(1, 1)
        br = best_response_value(
            g, ActivationParams.uniform(g, 1.0), sg.uniform_density(g)
        )
        assert br.value == pytest.approx(2.0, abs=1e-12)

    def test_simple_tree_low_regime_formula(self):
        g = sg.simple_binary_tree()
        p = 0.1
        br = best_response_value(
            g,
            ActivationParams.uniform(g, p),
            {"e1": 1 / 3, "e21": 1 / 3, "e22": 1 / 3},
        )
        expect = (37 - 33 * p + 7 * p * p) / (3 * p * (2 - p) ** 2)
        assert br.value == pytest.approx(expect, abs=1e-9)

    def test_belief_state_accessor(self):
        g = sg.line(1, 1)
        br = best_response_value(
            g, ActivationParams.uniform(g, 1.0), sg.uniform_density(g)
        )
        assert br.expected_stages("O", ()) == 0.0
        # one edge left, standing next to it: found at the next stage
        assert br.expected_stages("L1", {"R1"}) == pytest.approx(2.0)
        assert br.expected_stages("O", {"R1"}) == pytest.approx(1.0)

    def test_payoff_consistency(self, rng):
        # sum of hider mass times greedy hitting time equals the aggregate
        for _ in range(50):
            g = sg.random_tree(rng, int(rng.integers(1, 6)))
            p = float(rng.uniform(0.2, 1.0))
            params = ActivationParams.uniform(g, p)
            w = rng.random(g.n_edges) + 0.05
            hider = {e: x / w.sum() for e, x in zip(g.edge_ids(), w)}
            br = best_response_value(g, params, hider)
            agg = sum(hider[e] * br.hitting_time(e) for e in g.edge_ids())
            assert agg == pytest.approx(br.value, rel=1e-9)

    def test_supergradient_dominates(self, rng):
        # the best-response payoff column linearizes the concave value map
        g = sg.tree_from_shape("(()(()()))")
        p = 0.45
        params = ActivationParams.uniform(g, p)
        base = sg.uniform_density(g)
        br = best_response_value(g, params, base)
        gvec = {e: br.hitting_time(e) for e in g.edge_ids()}
        for _ in range(25):
            w = rng.random(g.n_edges) + 1e-3
            other = {e: x / w.sum() for e, x in zip(g.edge_ids(), w)}
            br2 = best_response_value(g, params, other)
            linear = sum(other[e] * gvec[e] for e in g.edge_ids())
            assert br2.value <= linear + 1e-9

    def test_monotone_in_information(self):
        # a searcher who already crossed an edge can only be faster
        g = sg.simple_binary_tree()
        params = ActivationParams.uniform(g, 0.4)
        hider = {"e1": 0.5, "e21": 0.5}
        br = best_response_value(g, params, hider)
        full = br.expected_stages("O", {"e1", "e21"})
        less = br.expected_stages("O", {"e21"})
        assert less < full

    def test_capacity_on_large_support(self):
        g = sg.parallel((1,) * 17 + (1,))
        params = ActivationParams.uniform(g, 0.5)
        with pytest.raises(sg.CapacityError):
            best_response_value(g, params, sg.uniform_density(g))

    def test_heterogeneous_probabilities(self):
        g = sg.line(1, 1)
        params = ActivationParams.from_map(g, {"L1": 0.9, "R1": 0.1})
        lo, hi = sg.stochastic_bounds(g, params)
        # any fixed hider lower-bounds the value; the certified game value
        # itself must sit inside the degree/probability bounds
        br = best_response_value(g, params, {"L1": 0.5, "R1": 0.5})
        cert = sg.approximate_value(g, params, tol=1e-6)
        assert br.value <= cert.upper + 1e-9
        assert lo - 1e-9 <= cert.lower and cert.upper <= hi + 1e-9


class StallingPolicy(Policy):
    """Stays forever: every hitting time diverges."""

    def actions(self, plan, v, visited, active):
        return [(STAY, 1.0)]


class TestHittingTimes:
    def test_route_policy_prefix_sums(self):
        g = sg.line(2, 1)
        p = 0.25
        params = ActivationParams.uniform(g, p)
        pol = sg.RoutePolicy(g, ("L1", "L2", "L2", "L1", "R1"))
        t = sg.policy_hitting_times(g, params, pol)
        assert t["L1"] == pytest.approx(1 / p)
        assert t["L2"] == pytest.approx(2 / p)
        assert t["R1"] == pytest.approx(5 / p)

    def test_unreachable_marker(self):
        g = sg.line(1, 1)
        params = ActivationParams.uniform(g, 0.5)
        pol = sg.RoutePolicy(g, ("L1",))
        t = sg.policy_hitting_times(g, params, pol)
        assert t["L1"] == pytest.approx(2.0)
        assert t["R1"] == UNREACHABLE

    def test_stalling_policy_raises(self):
        g = sg.line(1, 1)
        params = ActivationParams.uniform(g, 0.5)
        with pytest.raises(CoverageError):
            # reachable in one direction, but the policy may stop short:
            # a route that never moves cannot hit anything; mixing a mover
            # and a staller can stall with positive probability
            mix = sg.MixturePolicy(
                [sg.RoutePolicy(g, ("L1",)), StallingPolicy()], [0.5, 0.5]
            )
            sg.policy_hitting_times(g, params, mix, edges=("L1",))

    def test_continuation_instance(self):
        # relocated start with visited edges marked
        g = sg.simple_binary_tree()
        params = ActivationParams.uniform(g, 0.5)
        pol = sg.RoutePolicy(g, ("e21", "e2", "e1"), start="z")
        t = sg.policy_hitting_times(
            g, params, pol, edges=("e21", "e2", "e1"), start="z", visited={"e2", "e22"}
        )
        assert t["e21"] == pytest.approx(2.0)
        assert t["e2"] == pytest.approx(4.0)
        assert t["e1"] == pytest.approx(6.0)

    def test_greedy_policy_runs_in_simulation(self):
        g = sg.line(2, 1)
        params = ActivationParams.uniform(g, 0.6)
        hider = sg.uniform_density(g)
        br = best_response_value(g, params, hider)
        pol = br.policy()
        rep = sg.monte_carlo(g, params, hider, pol, n=20_000, seed=3)
        assert abs(rep.mean - br.value) <= 4 * rep.se

    def test_greedy_covers_off_support_edges(self):
        # hider support excludes an edge: the greedy policy still reaches it
        g = sg.line(2, 1)
        params = ActivationParams.uniform(g, 0.5)
        br = best_response_value(g, params, {"L2": 0.5, "R1": 0.5})
        t = br.hitting_time("L1")
        assert math.isfinite(t) and t >= 1.0


class TestApproximateValue:
    def test_line_family_grid(self):
        g = sg.line(3, 2)
        for p in (0.1, 0.5, 0.9):
            cert = sg.approximate_value(g, ActivationParams.uniform(g, p), tol=1e-6)
            cf = sg.closed_form_value("line", {"lam1": 3, "lam2": 2}, p)
            assert cert.gap <= 1e-6
            assert abs(cert.midpoint - cf.value) <= 1e-6
            assert not cert.warning

    def test_circle_family(self):
        g = sg.circle(5)
        for p in (0.3, 0.7, 1.0):
            cert = sg.approximate_value(g, ActivationParams.uniform(g, p), tol=1e-6)
            cf = sg.closed_form_value("circle", {"edges": 5}, p)
            assert abs(cert.midpoint - cf.value) <= 1e-6

    def test_certificate_structure(self):
        g = sg.circle(3)
        cert = sg.approximate_value(g, ActivationParams.uniform(g, 0.7), tol=1e-6)
        doc = cert.to_json()
        assert set(doc) >= {"lower", "upper", "gap", "iterations", "hider", "policy"}
        assert abs(sum(cert.hider.values()) - 1.0) < 1e-9
        assert doc["policy"]["kind"] == "mixture"
        weights = [c["weight"] for c in doc["policy"]["components"]]
        assert abs(sum(weights) - 1.0) < 1e-9
        assert cert.meta["lambda_weighting"] == "tau_edge"

    def test_witness_mixture_caps_edges(self):
        # rebuild the witness mixture and verify its worst edge is the upper bound
        g = sg.simple_binary_tree()
        params = ActivationParams.uniform(g, 0.35)
        cert = sg.approximate_value(g, params, tol=1e-9)
        comps = cert.policy["components"]
        pols = []
        for c in comps:
            d = c["policy"]
            if d["kind"] == "dp-greedy":
                pols.append(best_response_value(g, params, d["hider"]).policy())
            else:
                pols.append(sg.build_policy(g, params, d))
        mix = sg.MixturePolicy(pols, [c["weight"] for c in comps])
        t = sg.policy_hitting_times(g, params, mix)
        assert max(t.values()) == pytest.approx(cert.upper, abs=1e-7)

    def test_warning_on_tiny_cap(self):
        g = sg.parallel((2, 1, 1))
        cert = sg.approximate_value(
            g, ActivationParams.uniform(g, 0.4), tol=1e-12, iter_cap=1,
            seed_named=False,
        )
        assert cert.iterations == 1
        assert cert.lower <= cert.upper

    def test_lower_never_exceeds_upper(self, rng):
        for _ in range(10):
            g = sg.random_connected_multigraph(rng, int(rng.integers(2, 7)))
            p = float(rng.uniform(0.2, 1.0))
            cert = sg.approximate_value(
                g, ActivationParams.uniform(g, p), tol=1e-6, iter_cap=60
            )
            assert cert.lower <= cert.upper + 1e-12


class TestDeterministicValue:
    def test_trees_give_edge_count(self, rng):
        for _ in range(5):
            g = sg.random_tree(rng, int(rng.integers(1, 6)))
            cert = sg.deterministic_value(g)
            assert cert.midpoint == pytest.approx(g.n_edges, abs=1e-9)

    def test_circle_gives_half(self):
        cert = sg.deterministic_value(sg.circle(5))
        assert cert.midpoint == pytest.approx(3.0, abs=1e-9)

    def test_three_arc_regression(self):
        # three parallel edges admit a root-to-terminal Eulerian trail, so
        # three distinct edges can be searched in the first three stages:
        # the value sits exactly at the Eulerian floor despite the odd
        # degrees (frozen after the first certified run)
        cert = sg.deterministic_value(sg.parallel((1, 1, 1)))
        assert cert.midpoint == pytest.approx(2.0, abs=1e-9)
        assert cert.gap <= 1e-9

    def test_asserts_cover_lengths(self):
        cert = sg.deterministic_value(sg.parallel((2, 2)))
        assert cert.midpoint == pytest.approx(2.5, abs=1e-9)
