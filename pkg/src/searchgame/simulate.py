"""Monte Carlo episode engine, statistics, and the two counterexamples.

Episodes replay bit-identically from (seed, episode index) and episodes are
mutually independent, so batches parallelize trivially.  The engine accepts
any policy implementing the strategies interface, including history-
dependent ones via the plan state.

The two ``*_counterexample_check`` functions reproduce, by exact
continuation-game evaluation, the situations in which depth-first and
Eulerian discipline respectively fail to be best responses: each builds the
residual instance (visited edges marked, start vertex relocated), evaluates
the two candidate continuations exactly, and compares the sign of their
difference with the independent closed-form prediction.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .activation import ActivationParams, episode_rng
from .analytic import ebd, wait_first_active
from .graphs import GraphError, RootedGraph, counterexample_tree, parallel
from .solver import policy_hitting_times
from .strategies import STAY, Policy, RoutePolicy, UESPolicy, validate_hider

__all__ = [
    "History",
    "simulate_episode",
    "validate_history",
    "EstimateReport",
    "monte_carlo",
    "ComparisonResult",
    "tree_counterexample_check",
    "eulerian_counterexample_check",
]

DEFAULT_STAGE_CAP = 10**6


@dataclass
class History:
    """One episode: per-stage (active edge set, position after acting)."""

    hider_edge: str
    initial_vertex: str
    stages: list = field(default_factory=list)
    crossings: list = field(default_factory=list)  # edge id or None per stage
    capture_stage: int | None = None
    censored: bool = False


def simulate_episode(
    graph: RootedGraph,
    params: ActivationParams,
    hider_edge: str,
    policy: Policy,
    seed: int,
    episode: int = 0,
    stage_cap: int = DEFAULT_STAGE_CAP,
) -> History:
    """Play one episode to capture (or the stage cap), deterministically.

    All randomness (activation draws, mixture draw, policy randomization)
    comes from one counter-based stream keyed by (seed, episode).
    """
    graph.edge(hider_edge)
    rng = episode_rng(seed, episode)
    p_arr = params.as_array(graph)
    n_e = graph.n_edges
    eids = graph.edge_ids()

    plans = policy.initial_plans(graph.root, frozenset())
    plan = _sample(rng, plans)
    v = graph.root
    visited: frozenset = frozenset()
    hist = History(hider_edge=hider_edge, initial_vertex=graph.root)

    block = None
    block_at = 0
    for t in range(1, stage_cap + 1):
        if block is None or block_at >= block.shape[0]:
            block = rng.random((64, n_e))
            block_at = 0
        draw = block[block_at]
        block_at += 1
        active = frozenset(eids[i] for i in range(n_e) if draw[i] < p_arr[i])
        incident_active = frozenset(
            e.eid for e in graph.incident(v) if e.eid in active
        )
        acts = policy.actions(plan, v, visited, incident_active)
        action = _sample(rng, acts)
        plan = policy.advance(plan, v, visited, incident_active, action)
        if action is STAY:
            hist.stages.append((active, v))
            hist.crossings.append(None)
            continue
        e = graph.edge(action)
        if action not in incident_active:
            raise GraphError(f"policy proposed infeasible action {action!r} at {v!r}")
        v = e.other(v)
        visited = visited | {action}
        hist.stages.append((active, v))
        hist.crossings.append(action)
        if action == hider_edge:
            hist.capture_stage = t
            return hist
    hist.censored = True
    return hist


def _sample(rng, dist):
    if len(dist) == 1:
        return dist[0][0]
    u = rng.random()
    acc = 0.0
    for item, prob in dist:
        acc += prob
        if u < acc:
            return item
    return dist[-1][0]


def validate_history(graph: RootedGraph, hist: History):
    """Audit walk feasibility and the capture rule; raises on violation."""
    v = hist.initial_vertex
    for t, ((active, pos), crossed) in enumerate(
        zip(hist.stages, hist.crossings), start=1
    ):
        if crossed is None:
            if pos != v:
                raise GraphError(f"stage {t}: stayed but moved {v!r} -> {pos!r}")
        else:
            e = graph.edge(crossed)
            if crossed not in active:
                raise GraphError(f"stage {t}: crossed inactive edge {crossed!r}")
            if not e.touches(v) or e.other(v) != pos:
                raise GraphError(f"stage {t}: crossing {crossed!r} does not fit walk")
            if crossed == hist.hider_edge and hist.capture_stage != t:
                raise GraphError(f"stage {t}: hider edge crossed without capture")
        v = pos
    if hist.capture_stage is not None:
        if hist.capture_stage != len(hist.stages):
            raise GraphError("capture stage is not the final stage")
        if hist.crossings[-1] != hist.hider_edge:
            raise GraphError("capture stage does not cross the hider edge")


@dataclass
class EstimateReport:
    """Sample mean of capture stages with its standard error."""

    mean: float
    se: float
    n: int
    seed: int
    censored: int = 0
    biased: bool = False

    def to_json(self) -> dict:
        return {
            "mean": self.mean,
            "se": self.se,
            "n": self.n,
            "seed": self.seed,
            "censored": self.censored,
        }


def monte_carlo(
    graph: RootedGraph,
    params: ActivationParams,
    hider: dict,
    policy: Policy,
    n: int,
    seed: int,
    jobs: int = 1,
    stage_cap: int = DEFAULT_STAGE_CAP,
) -> EstimateReport:
    """Mean capture stage over ``n`` episodes with hider edges drawn fresh.

    Censored episodes (stage cap reached) enter the mean at the cap value
    and set the ``biased`` flag; they are counted, never dropped.  Results
    are identical for any ``jobs`` value: episode i's randomness depends
    only on (seed, i) and aggregation is order-independent.
    """
    validate_hider(graph, hider)
    if n < 1:
        raise GraphError("need at least one episode")
    support = sorted(e for e, m in hider.items() if m > 0)
    masses = np.array([hider[e] for e in support])
    masses = masses / masses.sum()

    times = np.zeros(n)
    censored = np.zeros(n, dtype=bool)

    def run(i):
        rng = episode_rng(seed, i)
        hider_edge = support[int(rng.choice(len(support), p=masses))]
        # stage randomness must not depend on how the hider draw consumed
        # the stream differently across edges: use a shifted episode index
        hist = simulate_episode(
            graph, params, hider_edge, policy, seed, episode=n + i, stage_cap=stage_cap
        )
        if hist.capture_stage is None:
            times[i] = stage_cap
            censored[i] = True
        else:
            times[i] = hist.capture_stage

    if jobs <= 1:
        for i in range(n):
            run(i)
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(run, range(n)))

    mean = float(times.mean())
    if n > 1:
        se = float(times.std(ddof=1) / math.sqrt(n))
    else:
        se = 0.0
    n_cens = int(censored.sum())
    return EstimateReport(
        mean=mean, se=se, n=n, seed=seed, censored=n_cens, biased=n_cens > 0
    )


# ---------------------------------------------------------------------------
# Counterexample reproductions
# ---------------------------------------------------------------------------


@dataclass
class ComparisonResult:
    """Exact continuation payoffs of two candidate behaviors."""

    p: float
    g1: float
    g2: float
    reference: float

    @property
    def difference(self) -> float:
        return self.g1 - self.g2


def tree_counterexample_check(p: float) -> ComparisonResult:
    """Depth-first discipline is not a best response on the nine-edge tree.

    After the searcher has searched the deep right path and stands at the
    branching vertex with the upward edge active and the remaining leaf
    inactive, continuing upward to the far arm (g1) is compared with
    waiting for the nearby leaf (g2), both evaluated exactly against the
    cycle-time-proportional hider.  The difference must have the sign of
    ``(11/3)(7/p + 1/(1-(1-p)^2)) - 30/p``, which is negative on (0, 1).
    """
    if not (0.0 < p < 1.0):
        raise GraphError("p must lie strictly inside (0, 1)")
    g = counterexample_tree()
    params = ActivationParams.uniform(g, p)
    eps = ebd(g, p)
    left_down = ("e1", "c2", "c3", "c4", "e1p")
    left_up = tuple(reversed(left_down))
    visited0 = frozenset({"e2", "e22", "e22p"})

    # option 1: cross the (active) upward edge now, then commit to the far
    # arm first; the crossing itself costs exactly one stage.
    route1 = left_down + left_up + ("e2", "e21")
    t1 = policy_hitting_times(
        g,
        params,
        RoutePolicy(g, route1, start="O"),
        edges=("e1p", "e21"),
        start="O",
        visited=visited0 | {"e2"},
    )
    g1 = eps["e1p"] * (1.0 + t1["e1p"]) + eps["e21"] * (1.0 + t1["e21"])

    # option 2: wait this stage, then take the nearby leaf first.
    route2 = ("e21", "e21", "e2") + left_down
    t2 = policy_hitting_times(
        g,
        params,
        RoutePolicy(g, route2, start="v2"),
        edges=("e1p", "e21"),
        start="v2",
        visited=visited0,
    )
    g2 = eps["e21"] * (1.0 + t2["e21"]) + eps["e1p"] * (1.0 + t2["e1p"])

    reference = (11.0 / 3.0) * (7.0 / p + wait_first_active(p, 2)) - 30.0 / p
    diff = g1 - g2
    if not math.copysign(1.0, diff) == math.copysign(1.0, reference):
        raise GraphError(
            f"sign mismatch: exact difference {diff} vs reference {reference}"
        )
    return ComparisonResult(p=p, g1=g1, g2=g2, reference=reference)


class _EulerianDeviation(Policy):
    """The profitable deviation from Eulerian discipline on four 2-paths.

    From the terminal, cross the first active of the two untouched far
    sides, climb its path, then take the first active of the last path's
    origin edge and the remaining far origin edge, finishing the leftovers
    by the shortest committed sweep.
    """

    def __init__(self, graph):
        self.graph = graph
        self.all_edges = frozenset(graph.edge_ids())

    def actions(self, plan, v, visited, active):
        fresh = [
            e.eid for e in self.graph.incident(v) if e.eid not in visited
        ]
        if fresh:
            avail = [e for e in fresh if e in active]
            if not avail:
                return [(STAY, 1.0)]
            w = 1.0 / len(avail)
            return [(e, w) for e in avail]
        # transit: all incident searched; head toward the nearest unvisited
        # edge, routing through the terminal on ties
        remaining = self.all_edges - visited
        if not remaining:
            return [(STAY, 1.0)]
        step = self._transit_step(v, remaining)
        return [(step, 1.0)] if step in active else [(STAY, 1.0)]

    def _transit_step(self, v, remaining):
        # BFS over vertices; tie-break by preferring the terminal vertex D
        best = None
        for e in self.graph.incident(v):
            d = self._dist_to_remaining(e.other(v), remaining)
            key = (d, 0 if e.other(v) == "D" else 1, self.graph.edge_index(e.eid))
            if best is None or key < best[0]:
                best = (key, e.eid)
        return best[1]

    def _dist_to_remaining(self, v, remaining):
        seen = {v}
        frontier = [v]
        d = 0
        while frontier:
            nxt = []
            for u in frontier:
                for e in self.graph.incident(u):
                    if e.eid in remaining:
                        return d
                    w = e.other(u)
                    if w not in seen:
                        seen.add(w)
                        nxt.append(w)
            frontier = nxt
            d += 1
        return math.inf  # pragma: no cover


def eulerian_counterexample_check(p: float) -> ComparisonResult:
    """Eulerian discipline is not always a best response on four 2-paths.

    The searcher has traversed one full path and one far-side edge and
    stands mid-path with the backward edge active and the forward one not.
    Waiting to preserve the Eulerian circuit (g1) is compared against
    backtracking through the terminal (g2), both against the uniform hider.
    The sign of g2 - g1 equals the sign of 5p - 2.
    """
    if not (0.0 < p <= 1.0):
        raise GraphError("p must lie in (0, 1]")
    g = parallel((2, 2, 2, 2))
    params = ActivationParams.uniform(g, p)
    visited0 = frozenset({"e4_1", "e4_2", "e1_2"})
    remaining = [e for e in g.edge_ids() if e not in visited0]

    # option 1: wait now (one stage), then continue as the Eulerian searcher
    t1 = policy_hitting_times(
        g, params, UESPolicy(g), edges=remaining, start="w1_1", visited=visited0
    )
    g1 = sum(1.0 + t1[e] for e in remaining) / 5.0

    # option 2: recross the backward edge now (one stage), then deviate
    t2 = policy_hitting_times(
        g,
        params,
        _EulerianDeviation(g),
        edges=remaining,
        start="D",
        visited=visited0,
    )
    g2 = sum(1.0 + t2[e] for e in remaining) / 5.0

    reference = 5.0 * p - 2.0
    diff = g2 - g1
    if abs(diff) > 1e-12 and abs(reference) > 1e-12:
        if math.copysign(1.0, diff) != math.copysign(1.0, reference):
            raise GraphError(
                f"sign mismatch: exact difference {diff} vs reference {reference}"
            )
    return ComparisonResult(p=p, g1=g1, g2=g2, reference=reference)
