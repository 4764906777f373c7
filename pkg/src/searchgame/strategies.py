"""Searcher policies and hider distributions.

Every searcher strategy used anywhere in the package implements one small
Markovian interface, consumable both by the exact absorbing-chain evaluator
and by the Monte Carlo engine:

* ``initial_plans(start, visited)`` - distribution over opaque hashable plan
  states, drawn once at stage zero (this is where tour mixtures live);
* ``actions(plan, v, visited, active)`` - distribution over ``None`` (stay)
  or an edge id to traverse; any edge returned must be active and incident;
* ``advance(plan, v, visited, active, action)`` - the next plan state.

``visited`` is the set of edges traversed so far and ``active`` the set of
currently active edges incident to ``v``.  Policies may ignore either.

Built-ins: committed routes, uniform mixtures over minimum covering tours,
the depth-first family (uniform, bias-balanced, fixed branch order), the
Eulerian-completion searcher and its uniform variant, the straight-through
parallel-graph searcher, and the waiting searcher that is optimal on the
four-edge binary tree at low activation probability.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import analytic
from .activation import ActivationParams
from .graphs import (
    GraphError,
    ParallelDescriptor,
    RootedGraph,
    TreeView,
    chinese_postman_tours,
)

__all__ = [
    "STAY",
    "uniform_density",
    "leaf_uniform",
    "validate_hider",
    "RoutePolicy",
    "UCPSPolicy",
    "DFSPolicy",
    "udfs",
    "bdfs",
    "pure_dfs",
    "enumerate_pure_dfs",
    "UESPolicy",
    "enumerate_es_plans",
    "ParallelUniformPolicy",
    "parallel_structure",
    "SimpleTreeLowPPolicy",
    "simple_tree_roles",
    "MixturePolicy",
    "build_policy",
    "check_action_feasibility",
]

STAY = None


# ---------------------------------------------------------------------------
# Hider distributions
# ---------------------------------------------------------------------------


def uniform_density(graph: RootedGraph) -> dict:
    """The uniform distribution on all edges."""
    w = 1.0 / graph.n_edges
    return {e.eid: w for e in graph.edges}


def leaf_uniform(graph: RootedGraph) -> dict:
    """Uniform distribution on the leaf edges of a tree."""
    tv = graph.tree_view()
    w = 1.0 / len(tv.leaf_edges)
    return {e: w for e in tv.leaf_edges}


def validate_hider(graph: RootedGraph, dist: dict, tol: float = 1e-12) -> dict:
    """Check masses are nonnegative, supported on edges, and sum to one."""
    total = 0.0
    for eid, mass in dist.items():
        graph.edge(eid)
        if mass < -tol:
            raise GraphError(f"negative mass on edge {eid!r}")
        total += mass
    if abs(total - 1.0) > max(tol, 1e-9):
        raise GraphError(f"hider masses sum to {total}, not 1")
    return dist


# ---------------------------------------------------------------------------
# Base machinery
# ---------------------------------------------------------------------------


class Policy:
    """Default implementations for plan-free (stateless) policies."""

    def initial_plans(self, start, visited):
        return [(None, 1.0)]

    def advance(self, plan, v, visited, active, action):
        return plan

    def actions(self, plan, v, visited, active):  # pragma: no cover - abstract
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": type(self).__name__}


def check_action_feasibility(graph, v, active, acts):
    """Raise unless every positive-probability action is feasible now."""
    incident = {e.eid for e in graph.incident(v)}
    total = 0.0
    for action, prob in acts:
        if prob < 0:
            raise GraphError("negative action probability")
        total += prob
        if action is STAY or prob == 0.0:
            continue
        if action not in incident:
            raise GraphError(f"action {action!r} not incident to {v!r}")
        if action not in active:
            raise GraphError(f"action {action!r} not active")
    if abs(total - 1.0) > 1e-9:
        raise GraphError(f"action probabilities sum to {total}")


class RoutePolicy(Policy):
    """Committed edge sequence: wait for the next route edge, cross it.

    Once the route is exhausted the searcher stays forever.  The plan state
    is the index into the route.
    """

    def __init__(self, graph: RootedGraph, route, start=None):
        self.graph = graph
        self.route = tuple(route)
        v = start if start is not None else graph.root
        for eid in self.route:
            e = graph.edge(eid)
            if not e.touches(v):
                raise GraphError(f"route edge {eid!r} not incident to {v!r}")
            v = e.other(v)

    def initial_plans(self, start, visited):
        return [(0, 1.0)]

    def actions(self, plan, v, visited, active):
        if plan >= len(self.route):
            return [(STAY, 1.0)]
        nxt = self.route[plan]
        if nxt in active:
            return [(nxt, 1.0)]
        return [(STAY, 1.0)]

    def advance(self, plan, v, visited, active, action):
        return plan + 1 if action is not STAY else plan

    def describe(self):
        return {"kind": "route", "route": list(self.route)}


class UCPSPolicy(Policy):
    """Uniform mixture over all minimum-length closed covering tours.

    One tour is drawn at stage zero and then followed as a committed route;
    nothing is redrawn mid-episode.  (Distinct from the coin-flip between a
    single tour and its reverse: the mixture here is over *all* tours.)
    """

    def __init__(self, graph: RootedGraph):
        self.graph = graph
        self.tours = chinese_postman_tours(graph)
        if not self.tours:  # pragma: no cover - connected graphs always have one
            raise GraphError("no covering tour found")

    def initial_plans(self, start, visited):
        w = 1.0 / len(self.tours)
        return [((i, 0), w) for i in range(len(self.tours))]

    def actions(self, plan, v, visited, active):
        tour_idx, pos = plan
        tour = self.tours[tour_idx]
        if pos >= len(tour):
            return [(STAY, 1.0)]
        nxt = tour[pos]
        return [(nxt, 1.0)] if nxt in active else [(STAY, 1.0)]

    def advance(self, plan, v, visited, active, action):
        tour_idx, pos = plan
        return (tour_idx, pos + 1) if action is not STAY else plan

    def describe(self):
        return {"kind": "ucps"}


# ---------------------------------------------------------------------------
# Depth-first family
# ---------------------------------------------------------------------------


class DFSPolicy(Policy):
    """Depth-first searcher on a tree.

    When the current vertex still has unsearched outgoing edges: take one of
    the active ones (per the branch rule below), or wait if none is active.
    When all outgoing edges are searched: take the backward edge if active,
    else wait.  The searcher therefore never retreats past an unexhausted
    subtree.

    Branch rules:

    * ``uniform`` - uniformly among active unsearched outgoing edges;
    * ``fixed``  - highest-priority active unsearched edge, priorities given
      per vertex at construction;
    * ``biased`` - binary trees only; when both outgoing edges are
      unsearched and both active, choose per the supplied probabilities,
      otherwise forced.
    """

    def __init__(self, graph: RootedGraph, rule="uniform", order=None, probs=None):
        self.graph = graph
        self.tree = graph.tree_view()
        self.rule = rule
        if rule == "fixed":
            self.order = {}
            order = order or {}
            for v in graph.vertices:
                kids = self.tree.children[v]
                ordered = tuple(order.get(v, kids))
                if sorted(ordered) != sorted(kids):
                    raise GraphError(f"branch order at {v!r} must permute {kids}")
                self.order[v] = ordered
        elif rule == "biased":
            if not self.tree.is_binary():
                raise GraphError("biased branch rule needs a binary tree")
            self.probs = probs or {}
            for v in self.tree.branching_vertices():
                if v not in self.probs:
                    raise GraphError(f"missing branch probabilities at {v!r}")
        elif rule != "uniform":
            raise GraphError(f"unknown branch rule {rule!r}")

    def actions(self, plan, v, visited, active):
        kids = self.tree.children[v]
        unsearched = [e for e in kids if e not in visited]
        if unsearched:
            avail = [e for e in unsearched if e in active]
            if not avail:
                return [(STAY, 1.0)]
            if self.rule == "uniform":
                w = 1.0 / len(avail)
                return [(e, w) for e in avail]
            if self.rule == "fixed":
                for e in self.order[v]:
                    if e in avail:
                        return [(e, 1.0)]
            # biased: bias only applies with both edges unsearched and active
            if len(avail) == 1 or len(unsearched) == 1:
                return [(avail[0], 1.0)]
            pr = self.probs[v]
            return [(e, pr[e]) for e in avail]
        back = self.tree.parent_edge[v]
        if back is None:
            return [(STAY, 1.0)]
        return [(back, 1.0)] if back in active else [(STAY, 1.0)]

    def describe(self):
        if self.rule == "fixed":
            return {"kind": "pure-dfs", "order": {v: list(o) for v, o in self.order.items()}}
        return {"kind": "udfs" if self.rule == "uniform" else "bdfs"}


def udfs(graph: RootedGraph) -> DFSPolicy:
    """The uniformly branching depth-first searcher."""
    return DFSPolicy(graph, rule="uniform")


def bdfs(graph: RootedGraph, p: float) -> DFSPolicy:
    """Bias-balanced depth-first searcher for a binary tree.

    Branch probabilities come from the subtree cycle times and correction
    terms (clipped into [0, 1] where necessary).
    """
    info = analytic.branch_alphas(graph, p)
    probs = {v: rec["probs"] for v, rec in info.items()}
    return DFSPolicy(graph, rule="biased", probs=probs)


def pure_dfs(graph: RootedGraph, order=None) -> DFSPolicy:
    return DFSPolicy(graph, rule="fixed", order=order)


def enumerate_pure_dfs(graph: RootedGraph):
    """All fixed-branch-order depth-first searchers of a tree."""
    tv = graph.tree_view()
    branchers = [v for v in graph.vertices if len(tv.children[v]) >= 2]
    perms = [list(itertools.permutations(tv.children[v])) for v in branchers]
    out = []
    for combo in itertools.product(*perms):
        order = dict(zip(branchers, combo))
        out.append(DFSPolicy(graph, rule="fixed", order=order))
    return out


# ---------------------------------------------------------------------------
# Eulerian searchers
# ---------------------------------------------------------------------------


def _eulerian_trail_exists(graph, edge_set, start, end) -> bool:
    """Can ``edge_set`` be traversed each-once by a trail from start to end?"""
    if not edge_set:
        return start == end
    deg: dict = {}
    adj: dict = {}
    for eid in edge_set:
        e = graph.edge(eid)
        deg[e.u] = deg.get(e.u, 0) + 1
        deg[e.v] = deg.get(e.v, 0) + 1
        adj.setdefault(e.u, set()).add(e.v)
        adj.setdefault(e.v, set()).add(e.u)
    odd = {v for v, d in deg.items() if d % 2 == 1}
    if start == end:
        if odd:
            return False
    elif odd != {start, end}:
        return False
    # connectivity: all touched vertices plus the endpoints in one component
    touched = set(deg)
    if start not in touched or end not in touched:
        return False
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adj.get(v, ()):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return touched <= seen


class UESPolicy(Policy):
    """Eulerian searcher with uniform branching.

    Traverses each edge exactly once, tracing an Eulerian circuit from the
    root.  At each vertex it randomizes uniformly over the active unvisited
    incident edges whose traversal still permits completing a circuit;
    edges that would strand the remaining requirement are never taken
    (if nothing safe is active, wait).
    """

    def __init__(self, graph: RootedGraph, priority=None):
        if not graph.is_eulerian():
            raise GraphError("graph is not Eulerian")
        self.graph = graph
        self.all_edges = frozenset(graph.edge_ids())
        self.priority = tuple(priority) if priority is not None else None
        if self.priority is not None and sorted(self.priority) != sorted(
            self.all_edges
        ):
            raise GraphError("priority must permute the edge set")

    def _candidates(self, v, visited, active):
        unvisited = self.all_edges - visited
        out = []
        for e in self.graph.incident(v):
            if e.eid in visited or e.eid not in active:
                continue
            rest = unvisited - {e.eid}
            if _eulerian_trail_exists(self.graph, rest, e.other(v), self.graph.root):
                out.append(e.eid)
        return out

    def actions(self, plan, v, visited, active):
        cands = self._candidates(v, visited, active)
        if not cands:
            return [(STAY, 1.0)]
        if self.priority is not None:
            best = min(cands, key=self.priority.index)
            return [(best, 1.0)]
        w = 1.0 / len(cands)
        return [(c, w) for c in cands]

    def describe(self):
        if self.priority is not None:
            return {"kind": "es-plan", "priority": list(self.priority)}
        return {"kind": "ues"}


def enumerate_es_plans(graph: RootedGraph, limit: int | None = None):
    """Fixed-priority Eulerian searchers (deterministic tie-breaking).

    Enumerates priority permutations of the edge set; with ``limit`` set, a
    deterministic evenly spaced sample of that many permutations is taken
    instead of the full factorial.
    """
    ids = sorted(graph.edge_ids())
    perms = itertools.permutations(ids)
    if limit is None:
        chosen = list(perms)
    else:
        total = 1
        for k in range(2, len(ids) + 1):
            total *= k
        if total <= limit:
            chosen = list(itertools.permutations(ids))
        else:
            step = max(1, total // limit)
            chosen = list(itertools.islice(perms, 0, step * limit, step))
    return [UESPolicy(graph, priority=p) for p in chosen]


def parallel_structure(graph: RootedGraph) -> ParallelDescriptor:
    """Recover the parallel-path structure of a graph.

    Generated graphs carry their descriptor; otherwise the structure is
    detected by peeling degree-two chains between the root and a common
    terminal (first valid terminal in vertex order wins).
    """
    desc = graph.meta.get("descriptor")
    if isinstance(desc, ParallelDescriptor):
        return desc
    root = graph.root
    for cand in graph.vertices:
        if cand == root:
            continue
        paths = []
        used = set()
        ok = True
        for e in graph.incident(root):
            if e.eid in used:
                continue
            path = [e.eid]
            v = e.other(root)
            prev = root
            while v not in (cand,) and ok:
                if graph.degree(v) != 2 or v == root:
                    ok = False
                    break
                nxt = next(
                    (x for x in graph.incident(v) if x.eid != path[-1]), None
                )
                if nxt is None:
                    ok = False
                    break
                path.append(nxt.eid)
                prev, v = v, nxt.other(v)
            if not ok:
                break
            used.update(path)
            paths.append(tuple(path))
        if ok and used == set(graph.edge_ids()) and len(paths) >= 2:
            return ParallelDescriptor(
                lams=tuple(len(p) for p in paths),
                origin=root,
                terminal=cand,
                path_edges=tuple(paths),
            )
    raise GraphError("graph is not a parallel graph rooted at an endpoint")


class ParallelUniformPolicy(Policy):
    """Straight-through searcher on a parallel graph.

    At either endpoint, choose uniformly among active unsearched incident
    edges; on a path interior, cross the single unsearched incident edge as
    soon as it is active.  On an even number of paths this induces exactly
    the uniform Eulerian searcher's law.
    """

    def __init__(self, graph: RootedGraph, descriptor: ParallelDescriptor | None = None):
        self.graph = graph
        self.desc = descriptor or parallel_structure(graph)

    def actions(self, plan, v, visited, active):
        if v in (self.desc.origin, self.desc.terminal):
            cands = [
                e.eid
                for e in self.graph.incident(v)
                if e.eid not in visited and e.eid in active
            ]
            if not cands:
                return [(STAY, 1.0)]
            w = 1.0 / len(cands)
            return [(c, w) for c in cands]
        forward = [e.eid for e in self.graph.incident(v) if e.eid not in visited]
        if not forward:
            return [(STAY, 1.0)]
        if len(forward) > 1:
            raise GraphError(f"interior vertex {v!r} entered with two fresh edges")
        return [(forward[0], 1.0)] if forward[0] in active else [(STAY, 1.0)]

    def describe(self):
        return {"kind": "parallel-uniform"}


# ---------------------------------------------------------------------------
# The four-edge binary tree, low-activation regime
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimpleTreeRoles:
    """Edge/vertex roles of a tree shaped like the four-edge binary tree."""

    e1: str
    e2: str
    e21: str
    e22: str
    v2: str
    leaves: frozenset


def simple_tree_roles(graph: RootedGraph) -> SimpleTreeRoles:
    tv = graph.tree_view() if graph.is_tree() else None
    if tv is None or graph.n_edges != 4:
        raise GraphError("not the four-edge binary tree")
    kids = tv.children[graph.root]
    if len(kids) != 2:
        raise GraphError("not the four-edge binary tree")
    leaf_kids = [e for e in kids if not tv.children[tv.head[e]]]
    deep_kids = [e for e in kids if len(tv.children[tv.head[e]]) == 2]
    if len(leaf_kids) != 1 or len(deep_kids) != 1:
        raise GraphError("not the four-edge binary tree")
    e1, e2 = leaf_kids[0], deep_kids[0]
    v2 = tv.head[e2]
    e21, e22 = tv.children[v2]
    if tv.children[tv.head[e21]] or tv.children[tv.head[e22]]:
        raise GraphError("not the four-edge binary tree")
    return SimpleTreeRoles(
        e1=e1, e2=e2, e21=e21, e22=e22, v2=v2, leaves=frozenset((e1, e21, e22))
    )


class SimpleTreeLowPPolicy(Policy):
    """Optimal searcher on the four-edge binary tree at low activation.

    Before any leaf edge is found: at the root take the short leaf edge
    whenever active, else descend the long branch when it alone is active;
    at the branching vertex take the first active leaf edge (uniform when
    both are).  After the short leaf edge only: continue as the uniform
    depth-first searcher.  After exactly one deep leaf edge: at the
    branching vertex take the sibling leaf when active; when only the
    upward edge is active, wait with the regime waiting probability and
    retreat otherwise; back at the root, prefer the short leaf edge, else
    descend again.  With two leaf edges done, head straight for the third.
    """

    def __init__(self, graph: RootedGraph, p: float):
        self.graph = graph
        self.roles = simple_tree_roles(graph)
        self.tree = graph.tree_view()
        self.p = p
        self.zeta = min(1.0, max(0.0, analytic.zeta(p)))
        self._udfs = DFSPolicy(graph, rule="uniform")

    def actions(self, plan, v, visited, active):
        r = self.roles
        lv = visited & r.leaves
        root = self.graph.root
        if len(lv) == 0:
            if v == root:
                if r.e1 in active:
                    return [(r.e1, 1.0)]
                if r.e2 in active:
                    return [(r.e2, 1.0)]
                return [(STAY, 1.0)]
            if v == r.v2:
                avail = [e for e in (r.e21, r.e22) if e in active]
                if not avail:
                    return [(STAY, 1.0)]
                w = 1.0 / len(avail)
                return [(e, w) for e in avail]
            raise GraphError(f"unexpected state for this searcher: at {v!r}")
        if lv == {r.e1}:
            return self._udfs.actions(None, v, visited, active)
        if len(lv) == 1:
            seen = next(iter(lv))
            other = r.e22 if seen == r.e21 else r.e21
            if v == r.v2:
                if other in active:
                    return [(other, 1.0)]
                if r.e2 in active:
                    if self.zeta >= 1.0:
                        return [(STAY, 1.0)]
                    return [(STAY, self.zeta), (r.e2, 1.0 - self.zeta)]
                return [(STAY, 1.0)]
            if v == root:
                # having retreated to go for the short leaf, wait it out
                if r.e1 in active:
                    return [(r.e1, 1.0)]
                return [(STAY, 1.0)]
            # at the leaf vertex below the edge just searched: climb back
            back = self.tree.parent_edge[v]
            if back is None:
                raise GraphError(f"unexpected state for this searcher: at {v!r}")
            return [(back, 1.0)] if back in active else [(STAY, 1.0)]
        if len(lv) == 2:
            (target,) = r.leaves - lv
            step = self.tree.path_to_edge(v, target)[0]
            return [(step, 1.0)] if step in active else [(STAY, 1.0)]
        return [(STAY, 1.0)]

    def describe(self):
        return {"kind": "simple-low-p", "p": self.p}


class MixturePolicy(Policy):
    """Stage-zero mixture of component policies."""

    def __init__(self, components, weights):
        if len(components) != len(weights):
            raise GraphError("component/weight length mismatch")
        total = sum(weights)
        if abs(total - 1.0) > 1e-9:
            raise GraphError("mixture weights must sum to 1")
        self.components = list(components)
        self.weights = [float(w) for w in weights]

    def initial_plans(self, start, visited):
        plans = []
        for i, (pol, w) in enumerate(zip(self.components, self.weights)):
            if w == 0.0:
                continue
            for sub, sp in pol.initial_plans(start, visited):
                plans.append(((i, sub), w * sp))
        return plans

    def actions(self, plan, v, visited, active):
        i, sub = plan
        return self.components[i].actions(sub, v, visited, active)

    def advance(self, plan, v, visited, active, action):
        i, sub = plan
        return (i, self.components[i].advance(sub, v, visited, active, action))

    def describe(self):
        return {
            "kind": "mixture",
            "components": [
                {"weight": w, "policy": c.describe()}
                for c, w in zip(self.components, self.weights)
            ],
        }


def build_policy(graph: RootedGraph, params: ActivationParams, descriptor) -> Policy:
    """Construct a policy from its JSON descriptor.

    ``{"kind": "udfs" | "bdfs" | "ucps" | "ues" | "parallel-uniform" |
       "simple-low-p" | "pure-dfs" | "route", "order": {vertex: [edges]}?,
       "route": [edges]?}``
    """
    if isinstance(descriptor, str):
        descriptor = {"kind": descriptor}
    kind = descriptor.get("kind")
    if kind == "udfs":
        return udfs(graph)
    if kind == "bdfs":
        return bdfs(graph, params.uniform_p())
    if kind == "ucps":
        return UCPSPolicy(graph)
    if kind == "ues":
        return UESPolicy(graph)
    if kind == "parallel-uniform":
        return ParallelUniformPolicy(graph)
    if kind == "simple-low-p":
        return SimpleTreeLowPPolicy(graph, params.uniform_p())
    if kind == "pure-dfs":
        order = {v: tuple(o) for v, o in (descriptor.get("order") or {}).items()}
        return pure_dfs(graph, order)
    if kind == "route":
        return RoutePolicy(graph, descriptor["route"])
    raise GraphError(f"unknown policy kind {kind!r}")
