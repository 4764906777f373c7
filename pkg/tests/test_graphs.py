"""Graph construction, classification, tours and generators."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import searchgame as sg


def brute_min_cover_tours(graph):
    """Independent oracle: BFS over closed walks, shortest covering first.

    Enumerates all walks from the root by length; returns (min length, set
    of minimal closed covering walks).  Exponential, for tiny graphs only.
    """
    root = graph.root
    full = frozenset(graph.edge_ids())
    level = [(root, frozenset(), ())]
    for depth in range(1, 2 * graph.n_edges + 1):
        nxt = []
        found = set()
        for v, covered, walk in level:
            for e in graph.incident(v):
                w = e.other(v)
                c2 = covered | {e.eid}
                walk2 = walk + (e.eid,)
                if c2 == full and w == root:
                    found.add(walk2)
                nxt.append((w, c2, walk2))
        if found:
            return depth, found
        level = nxt
    raise AssertionError("no covering tour found")


class TestConstruction:
    def test_rejects_self_loop(self):
        with pytest.raises(sg.GraphError):
            sg.RootedGraph(["a"], [("e", "a", "a")], "a")

    def test_rejects_disconnected(self):
        with pytest.raises(sg.GraphError):
            sg.RootedGraph(
                ["a", "b", "c", "d"], [("e1", "a", "b"), ("e2", "c", "d")], "a"
            )

    def test_rejects_duplicate_edge_ids(self):
        with pytest.raises(sg.GraphError):
            sg.RootedGraph(["a", "b"], [("e", "a", "b"), ("e", "b", "a")], "a")

    def test_rejects_unknown_root(self):
        with pytest.raises(sg.GraphError):
            sg.RootedGraph(["a", "b"], [("e", "a", "b")], "zz")

    def test_parallel_edges_allowed(self):
        g = sg.RootedGraph(["a", "b"], [("e1", "a", "b"), ("e2", "a", "b")], "a")
        assert g.n_edges == 2
        assert g.classify() == "eulerian"


class TestNeighbors:
    def test_no_active_edges(self):
        g = sg.line(2, 1)
        assert sg.neighbors(g, frozenset(), "O") == {"O"}

    def test_full_activation_interior(self):
        g = sg.line(2, 1)
        assert sg.neighbors(g, set(g.edge_ids()), "O") == {"O", "L1", "R1"}

    def test_partial(self):
        g = sg.tree_from_shape("(()())")  # two-edge star
        assert sg.neighbors(g, {"e2"}, "O") == {"O", "v2"}

    def test_unknown_vertex(self):
        g = sg.line(1, 1)
        with pytest.raises(sg.GraphError):
            sg.neighbors(g, set(), "nope")

    @given(st.integers(0, 2**6 - 1), st.data())
    @settings(max_examples=60, deadline=None)
    def test_always_contains_self(self, mask, data):
        rng = np.random.default_rng(data.draw(st.integers(0, 10**6)))
        g = sg.random_connected_multigraph(rng, 6)
        ids = g.edge_ids()
        active = {ids[i] for i in range(len(ids)) if mask & (1 << i)}
        for v in g.vertices:
            assert v in sg.neighbors(g, active, v)


class TestClassify:
    def test_line_is_tree(self):
        assert sg.line(3, 2).classify() == "tree"

    def test_circle_is_eulerian(self):
        assert sg.circle(5).classify() == "eulerian"

    def test_three_parallel_edges_is_other(self):
        assert sg.parallel((1, 1, 1)).classify() == "other"

    def test_single_edge_is_tree(self):
        g = sg.RootedGraph(["a", "b"], [("e", "a", "b")], "a")
        assert g.classify() == "tree"


class TestTreeView:
    def test_subtree_edge_counts(self, rng):
        for _ in range(25):
            g = sg.random_tree(rng, int(rng.integers(1, 9)))
            tv = g.tree_view()
            for e in g.edges:
                kids = tv.children[tv.head[e.eid]]
                assert len(tv.subtree_edges_edge[e.eid]) == 1 + sum(
                    len(tv.subtree_edges_edge[c]) for c in kids
                )
                assert e.eid in tv.subtree_edges_edge[e.eid]

    def test_simple_binary_tree_layout(self):
        g = sg.simple_binary_tree()
        tv = g.tree_view()
        assert set(g.vertices) == {"O", "v", "v2", "z", "t"}
        assert set(g.edge_ids()) == {"e1", "e2", "e21", "e22"}
        assert set(tv.leaf_edges) == {"e1", "e21", "e22"}

    def test_path_to_edge(self):
        g = sg.simple_binary_tree()
        tv = g.tree_view()
        assert tv.path_to_edge("z", "e1") == ("e21", "e2", "e1")
        assert tv.path_to_edge("O", "e22") == ("e2", "e22")


class TestCoveringTours:
    def test_single_edge(self):
        g = sg.RootedGraph(["a", "b"], [("e", "a", "b")], "a")
        assert sg.chinese_postman_tours(g) == (("e", "e"),)

    def test_two_edge_star(self):
        g = sg.tree_from_shape("(()())")
        tours = sg.chinese_postman_tours(g)
        assert len(tours) == 2
        assert all(len(t) == 4 for t in tours)

    def test_circle_two_directions(self):
        tours = sg.chinese_postman_tours(sg.circle(4))
        assert len(tours) == 2
        assert all(len(t) == 4 for t in tours)

    def test_against_brute_force(self, rng):
        for _ in range(12):
            if rng.random() < 0.5:
                g = sg.random_tree(rng, int(rng.integers(1, 5)))
            else:
                g = sg.random_connected_multigraph(rng, int(rng.integers(2, 5)))
            length, walks = brute_min_cover_tours(g)
            tours = sg.chinese_postman_tours(g)
            assert set(tours) == walks
            assert all(len(t) == length for t in tours)
            if g.is_tree():
                assert length == 2 * g.n_edges
            else:
                assert length <= 2 * g.n_edges - 2

    def test_tour_is_a_walk_and_covers(self, rng):
        g = sg.random_connected_multigraph(rng, 5)
        for tour in sg.chinese_postman_tours(g):
            v = g.root
            seen = set()
            for eid in tour:
                e = g.edge(eid)
                assert e.touches(v)
                v = e.other(v)
                seen.add(eid)
            assert v == g.root
            assert seen == set(g.edge_ids())

    def test_cover_length_property_up_to_eight_edges(self, rng):
        for _ in range(15):
            g = sg.random_tree(rng, int(rng.integers(1, 9)))
            assert sg.min_cover_walk_length(g) == 2 * g.n_edges
        for _ in range(15):
            g = sg.random_connected_multigraph(rng, int(rng.integers(2, 9)))
            if not g.is_tree():
                assert sg.min_cover_walk_length(g) <= 2 * g.n_edges - 2

    def test_capacity_error(self):
        g = sg.parallel((1,) * 13 + (1,))
        with pytest.raises(sg.CapacityError):
            sg.chinese_postman_tours(g)


class TestEulerianCycles:
    def test_circle3(self):
        assert len(sg.eulerian_cycles(sg.circle(3))) == 2

    def test_two_parallel_edges(self):
        assert len(sg.eulerian_cycles(sg.parallel((1, 1)))) == 2

    def test_four_parallel_edges(self):
        cycles = sg.eulerian_cycles(sg.parallel((1, 1, 1, 1)))
        assert len(cycles) == 24
        # independent check: all permutations of the four edges qualify
        g = sg.parallel((1, 1, 1, 1))
        assert set(cycles) == set(itertools.permutations(g.edge_ids()))

    def test_non_eulerian_rejected(self):
        with pytest.raises(sg.GraphError):
            sg.eulerian_cycles(sg.line(1, 1))


class TestGenerators:
    def test_line_shape(self):
        g = sg.line(3, 2)
        assert g.n_edges == 5 and g.is_tree()
        assert g.degree("O") == 2

    def test_line_rejects_zero_arm(self):
        with pytest.raises(sg.GraphError):
            sg.line(3, 0)

    def test_circle_degrees(self):
        g = sg.circle(4)
        assert g.is_eulerian()
        assert all(g.degree(v) == 2 for v in g.vertices)

    def test_circle_minimum(self):
        with pytest.raises(sg.GraphError):
            sg.circle(2)

    def test_parallel_even_is_eulerian(self):
        assert sg.parallel((1, 2, 2, 1)).is_eulerian()
        assert not sg.parallel((1, 1, 1)).is_eulerian()

    def test_tree_from_shape_simple(self):
        g = sg.tree_from_shape("(()(()()))")
        assert g.n_edges == 4
        assert len(g.tree_view().leaf_edges) == 3

    def test_tree_from_shape_malformed(self):
        with pytest.raises(sg.GraphError):
            sg.tree_from_shape("(()")

    def test_counterexample_tree(self):
        g = sg.counterexample_tree()
        assert g.n_edges == 9
        assert set(g.tree_view().leaf_edges) == {"e1p", "e21", "e22p"}

    def test_random_binary_trees_are_binary(self, rng):
        for _ in range(20):
            g = sg.random_binary_tree(rng, int(rng.integers(1, 6)))
            tv = g.tree_view()
            assert tv.is_binary()
            assert len(tv.leaf_edges) <= 5


class TestInstanceIO:
    def test_round_trip(self):
        g = sg.parallel((2, 1))
        text = sg.dump_instance(g, {e.eid: 0.25 for e in g.edges})
        g2, probs = sg.load_instance(text)
        assert g2.edge_ids() == g.edge_ids()
        assert g2.root == g.root
        assert all(abs(p - 0.25) < 1e-15 for p in probs.values())

    def test_parse_error_position(self):
        with pytest.raises(sg.GraphError, match="line"):
            sg.load_instance("{broken")

    def test_bad_probability(self):
        g = sg.line(1, 1)
        text = sg.dump_instance(g, {e.eid: 1.0 for e in g.edges})
        with pytest.raises(sg.GraphError, match="outside"):
            sg.load_instance(text.replace("1.0", "1.5"))
