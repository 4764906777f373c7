"""Closed-form quantities for trees and parallel Eulerian graphs.

All formulas assume one common activation probability ``p`` across edges
(heterogeneous probabilities are handled only by the exact solver and the
simulator).  The central objects:

* ``tau`` - cycle time: expected number of stages a depth-first sweep of a
  subtree needs to leave a vertex and return to it with the subtree fully
  searched.  A vertex with ``n`` unsearched child edges pays
  ``sum_{k=1..n} 1/(1-(1-p)^k)`` for the downward crossings (waiting for
  the first active among the k edges not yet searched), ``n/p`` for the
  upward crossings, plus the children's own cycle times.  Independent of
  the branching order.
* ``Lambda`` - the correction term for binary trees such that every leaf
  edge's expected hitting time under the bias-balanced depth-first searcher
  equals ``tau(root)/2 + Lambda(root)``.  At a branching the child values
  are averaged with weights proportional to the child *edge* cycle times
  (``tau(e) = tau(head(e)) + 2/p``), plus the two-edge kernel
  ``(1/(1-(1-p)^2) - 1/p)/2``.
* ``ebd`` - the hider distribution on leaf edges whose subtree masses are
  proportional to subtree cycle times at every branching.
* ``theta`` / ``phi`` - the analogous cycle time and correction term for
  parallel Eulerian graphs (phi depends only on the number of paths).
* the closed-form game values for lines, circles and the four-edge binary
  tree, including the low-activation regime with its waiting probability
  ``zeta`` and the regime threshold ``REGIME_THRESHOLD = (9 - sqrt(65))/8``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .graphs import GraphError, RootedGraph, TreeView

__all__ = [
    "REGIME_THRESHOLD",
    "wait_first_active",
    "TreeAnalytics",
    "cycle_time_tree",
    "lambda_tree",
    "ebd",
    "bdfs_alpha",
    "unclamped_p_threshold",
    "phi",
    "theta_parallel",
    "zeta",
    "ClosedForm",
    "closed_form_value",
    "deterministic_bounds",
    "stochastic_bounds",
]

# Threshold where the four-edge binary tree switches optimal regimes.
REGIME_THRESHOLD = (9.0 - math.sqrt(65.0)) / 8.0


def _check_p(p: float):
    if not (0.0 < p <= 1.0):
        raise GraphError(f"activation probability {p} outside (0, 1]")


def wait_first_active(p: float, k: int) -> float:
    """Expected stages to wait for, then cross, the first active of k edges.

    Geometric with success probability ``1 - (1-p)^k``; the crossing happens
    on the success stage, so the expectation is ``1 / (1 - (1-p)^k)``.
    """
    if k < 1:
        raise GraphError("need at least one candidate edge")
    return 1.0 / (1.0 - (1.0 - p) ** k)


def _kernel(p: float) -> float:
    # two-candidate wait minus single-edge wait, halved; <= 0 for p < 1
    return 0.5 * (wait_first_active(p, 2) - 1.0 / p)


@dataclass
class TreeAnalytics:
    """Cycle times (and, for binary trees, Lambda values) of one tree."""

    tree: TreeView
    p: float
    tau_vertex: dict
    tau_edge: dict
    lambda_vertex: dict | None = None
    lambda_edge: dict | None = None

    def tau_root(self) -> float:
        return self.tau_vertex[self.tree.graph.root]

    def lambda_root(self) -> float:
        if self.lambda_vertex is None:
            raise GraphError("Lambda not computed (tree is not binary)")
        return self.lambda_vertex[self.tree.graph.root]

    def leaf_time(self) -> float:
        """Equalized leaf-edge hitting time: tau(root)/2 + Lambda(root)."""
        return 0.5 * self.tau_root() + self.lambda_root()


def _tree_view(graph_or_view) -> TreeView:
    if isinstance(graph_or_view, TreeView):
        return graph_or_view
    if isinstance(graph_or_view, RootedGraph):
        return graph_or_view.tree_view()
    raise GraphError(f"expected a tree, got {graph_or_view!r}")


def cycle_time_tree(graph_or_view, p: float) -> TreeAnalytics:
    """Cycle times tau(v), tau(e) for every vertex and edge of a tree."""
    _check_p(p)
    tv = _tree_view(graph_or_view)
    tau_v: dict = {}
    tau_e: dict = {}
    order = _topo_leaves_first(tv)
    for v in order:
        kids = tv.children[v]
        n = len(kids)
        t = sum(wait_first_active(p, k) for k in range(1, n + 1)) + n / p
        t += sum(tau_v[tv.head[e]] for e in kids)
        tau_v[v] = t
        for e in kids:
            tau_e[e] = tau_v[tv.head[e]] + 2.0 / p
    return TreeAnalytics(tree=tv, p=p, tau_vertex=tau_v, tau_edge=tau_e)


def lambda_tree(graph_or_view, p: float) -> TreeAnalytics:
    """Cycle times plus Lambda for a binary tree (<= 2 children anywhere)."""
    ana = cycle_time_tree(graph_or_view, p)
    tv = ana.tree
    if not tv.is_binary():
        raise GraphError("Lambda is defined for binary trees only")
    lam_v: dict = {}
    for v in _topo_leaves_first(tv):
        kids = tv.children[v]
        if not kids:
            lam_v[v] = 0.0
        elif len(kids) == 1:
            lam_v[v] = lam_v[tv.head[kids[0]]]
        else:
            e1, e2 = kids
            t1, t2 = ana.tau_edge[e1], ana.tau_edge[e2]
            l1, l2 = lam_v[tv.head[e1]], lam_v[tv.head[e2]]
            lam_v[v] = (t1 * l1 + t2 * l2) / (t1 + t2) + _kernel(p)
    ana.lambda_vertex = lam_v
    ana.lambda_edge = {e.eid: lam_v[tv.head[e.eid]] for e in tv.graph.edges}
    return ana


def _topo_leaves_first(tv: TreeView):
    depth = {tv.graph.root: 0}
    order = [tv.graph.root]
    i = 0
    while i < len(order):
        v = order[i]
        i += 1
        for e in tv.children[v]:
            w = tv.head[e]
            depth[w] = depth[v] + 1
            order.append(w)
    return list(reversed(order))


def ebd(graph_or_view, p: float) -> dict:
    """Hider distribution on leaf edges with tau-proportional subtree masses.

    At every branching vertex the mass assigned to each child subtree is
    proportional to the child edge's cycle time; within a unary chain the
    mass passes through unchanged.  At ``p = 1`` cycle times are twice the
    subtree edge counts, so this reduces to the count-proportional rule.
    """
    ana = cycle_time_tree(graph_or_view, p)
    tv = ana.tree
    mass = {tv.graph.root: 1.0}
    out: dict = {}
    stack = [tv.graph.root]
    while stack:
        v = stack.pop()
        kids = tv.children[v]
        if not kids:
            continue
        total = sum(ana.tau_edge[e] for e in kids)
        for e in kids:
            share = mass[v] * ana.tau_edge[e] / total
            w = tv.head[e]
            if not tv.children[w]:
                out[e] = share
            else:
                mass[w] = share
                stack.append(w)
    return out


def bdfs_alpha(lambda1: float, lambda2: float, tau1: float, tau2: float, p: float):
    """Branch probabilities for the bias-balanced depth-first searcher.

    Returns ``(alpha1, alpha2, clamped)`` with::

        alpha1 = clip[0,1]( 1/2 + (lambda1-lambda2)/(tau1+tau2)
                                  * (1-(1-p)^2)/p^2 )

    ``clamped`` reports whether the clip actually bit.
    """
    _check_p(p)
    if tau1 <= 0 or tau2 <= 0:
        raise GraphError("edge cycle times must be positive")
    raw = 0.5 + (lambda1 - lambda2) / (tau1 + tau2) * (1.0 - (1.0 - p) ** 2) / p**2
    a1 = min(1.0, max(0.0, raw))
    return a1, 1.0 - a1, a1 != raw


def branch_alphas(graph_or_view, p: float) -> dict:
    """Per-branching-vertex bias probabilities for a binary tree.

    Maps each branching vertex to ``{edge: probability}`` over its two child
    edges, plus a ``clamped`` flag accessible via :func:`unclamped_p_threshold`.
    """
    ana = lambda_tree(graph_or_view, p)
    tv = ana.tree
    out = {}
    for v in tv.branching_vertices():
        e1, e2 = tv.children[v]
        a1, a2, clamped = bdfs_alpha(
            ana.lambda_edge[e1],
            ana.lambda_edge[e2],
            ana.tau_edge[e1],
            ana.tau_edge[e2],
            p,
        )
        out[v] = {"probs": {e1: a1, e2: a2}, "clamped": clamped}
    return out


def unclamped_p_threshold(graph_or_view, grid=None) -> float:
    """Smallest grid p above which no branching needs clipping.

    Empirical, per tree; returns ``nan`` when even ``p = 1`` clips (cannot
    happen for proper binary trees, kept for safety).
    """
    tv = _tree_view(graph_or_view)
    if grid is None:
        grid = [k / 200.0 for k in range(1, 201)]
    best = float("nan")
    for p in sorted(grid, reverse=True):
        info = branch_alphas(tv, p)
        if any(rec["clamped"] for rec in info.values()):
            return best
        best = p
    return best


def phi(m: int, p: float) -> float:
    """Correction term for parallel Eulerian graphs with ``2m`` paths.

    Defined recursively from ``phi(1) = (1/(1-(1-p)^2) - 1/p)/2``; depends
    only on the number of paths, not on their lengths.
    """
    _check_p(p)
    if m < 1:
        raise GraphError("m must be >= 1")
    val = _kernel(p)
    for mm in range(2, m + 1):
        partial = sum(wait_first_active(p, k) for k in range(1, 2 * (mm - 1) + 1))
        val = (
            0.5 * wait_first_active(p, 2 * mm)
            + (0.5 - 1.0 / (2 * mm)) * wait_first_active(p, 2 * mm - 1)
            - (partial + 1.0 / p) / (2 * mm)
            + (mm - 1) / mm * val
        )
    return val


def theta_parallel(lams, p: float) -> float:
    """Cycle time of the parallel Eulerian graph with path lengths ``lams``.

    ``sum_{k=1..2m} (1/(1-(1-p)^k) + (lam_k - 1)/p)``; the k-th downward
    entry waits for the first active among the k paths still unsearched.
    Requires an even number of paths.  Equals the edge count at ``p = 1``.
    """
    _check_p(p)
    lams = tuple(lams)
    if len(lams) % 2 != 0:
        raise GraphError("parallel Eulerian graph needs an even number of paths")
    return sum(
        wait_first_active(p, k) + (lam - 1.0) / p
        for k, lam in enumerate(lams, start=1)
    )


def parallel_edge_time(lams, p: float) -> float:
    """Equalized per-edge hitting time under the uniform Eulerian searcher."""
    m2 = len(tuple(lams))
    return (theta_parallel(lams, p) + 1.0 / p) / 2.0 + phi(m2 // 2, p)


def zeta(p: float) -> float:
    """Waiting probability in the low-activation four-edge-tree searcher.

    Valid as a probability for p at or below the regime threshold (it equals
    one exactly at the threshold and tends to 7/8 as p -> 0).
    """
    _check_p(p)
    num = 8.0 * (2.0 - p) - (1.0 - p) * (1.0 + p) * (2.0 - p)
    den = 8.0 * (2.0 - p) * (1.0 - p) - p * (1.0 - p) ** 2
    if den == 0.0:  # p = 1; callers clamp into [0, 1]
        return math.inf
    return num / den


@dataclass(frozen=True)
class ClosedForm:
    """A closed-form game value with its validity domain in p."""

    value: float
    family: str
    formula: str
    p: float


def closed_form_value(family: str, params, p: float) -> ClosedForm:
    """Closed-form value of the game for the solved families.

    Families and their ``params``:

    * ``line``: dict with ``lam1``, ``lam2`` (root strictly inside) ->
      ``L/p + 1/(1-(1-p)^2) - 1/p`` with ``L = lam1 + lam2``.
    * ``rooted-at-extreme-line``: dict with ``edges`` -> ``edges / p``.
    * ``circle``: dict with ``edges`` -> ``1/(1-(1-p)^2) + (L-1)/(2p)``.
    * ``simple-binary-tree``: no params.  Two regimes meeting at
      ``REGIME_THRESHOLD``: above it ``(92-75p+15p^2) / (p(15-7p)(2-p))``,
      below it ``(37-33p+7p^2) / (3p(2-p)^2)``.
    """
    _check_p(p)
    params = params or {}
    if family == "line":
        lam1, lam2 = int(params["lam1"]), int(params["lam2"])
        if lam1 < 1 or lam2 < 1:
            raise GraphError("line arms must be >= 1 (root strictly inside)")
        L = lam1 + lam2
        val = L / p + wait_first_active(p, 2) - 1.0 / p
        return ClosedForm(val, family, "L/p + 1/(1-(1-p)^2) - 1/p", p)
    if family == "rooted-at-extreme-line":
        L = int(params["edges"])
        if L < 1:
            raise GraphError("line needs at least one edge")
        return ClosedForm(L / p, family, "E/p", p)
    if family == "circle":
        L = int(params["edges"])
        if L < 3:
            raise GraphError("circle needs at least 3 edges")
        val = wait_first_active(p, 2) + (L - 1.0) / (2.0 * p)
        return ClosedForm(val, family, "1/(1-(1-p)^2) + (L-1)/(2p)", p)
    if family == "simple-binary-tree":
        if p >= REGIME_THRESHOLD:
            val = (92.0 - 75.0 * p + 15.0 * p**2) / (p * (15.0 - 7.0 * p) * (2.0 - p))
            return ClosedForm(val, family, "(92-75p+15p^2)/(p(15-7p)(2-p))", p)
        val = (37.0 - 33.0 * p + 7.0 * p**2) / (3.0 * p * (2.0 - p) ** 2)
        return ClosedForm(val, family, "(37-33p+7p^2)/(3p(2-p)^2)", p)
    raise GraphError(f"no closed form for family {family!r}")


def deterministic_bounds(graph: RootedGraph):
    """Bounds on the full-activation value: (|E|+1)/2 <= val <= |E|.

    Exact for trees (``|E|``) and for Eulerian graphs with more than one
    edge (``(|E|+1)/2``).
    """
    m = graph.n_edges
    lo, hi = (m + 1) / 2.0, float(m)
    cls = graph.classify()
    if cls == "tree":
        return float(m), float(m)
    if cls == "eulerian" and m > 1:
        return (m + 1) / 2.0, (m + 1) / 2.0
    return lo, hi


def stochastic_bounds(graph: RootedGraph, params) -> tuple:
    """Interval bound on the game value for arbitrary activation parameters.

    ``val(1) / (1 - (1-p_min)^delta) <= val(p) <= val(1) / p_min`` with
    ``delta`` the maximum degree; when val(1) is itself only bracketed the
    interval propagates (lower of the lower bound, upper of the upper).
    """
    lo1, hi1 = deterministic_bounds(graph)
    pmin = params.min_p()
    delta = graph.max_degree()
    lo = lo1 / (1.0 - (1.0 - pmin) ** delta) if pmin < 1.0 else lo1
    hi = hi1 / pmin
    return lo, hi
