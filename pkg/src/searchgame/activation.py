"""Per-stage edge activation: parameters, exact local distributions, sampling.

Each edge ``e`` is active at each stage independently with probability
``p_e`` in (0, 1].  Solvers never sample: they enumerate the ``2^deg``
incident activation patterns of a vertex exactly.  Sampling is reserved for
the simulator and uses counter-based Philox streams so that episodes are
reproducible and independently addressable (safe to run in parallel).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import CapacityError, GraphError, RootedGraph

__all__ = [
    "ActivationParams",
    "incident_pattern_distribution",
    "sample_active_set",
    "episode_rng",
]

PATTERN_DEGREE_CAP = 20


@dataclass(frozen=True)
class ActivationParams:
    """Map edge-id -> activation probability, complete over a graph's edges."""

    probs: dict

    def __post_init__(self):
        for eid, p in self.probs.items():
            if not (0.0 < float(p) <= 1.0):
                raise GraphError(f"edge {eid!r}: probability {p} outside (0, 1]")

    @staticmethod
    def uniform(graph: RootedGraph, p: float) -> "ActivationParams":
        if not (0.0 < p <= 1.0):
            raise GraphError(f"probability {p} outside (0, 1]")
        return ActivationParams({e.eid: float(p) for e in graph.edges})

    @staticmethod
    def from_map(graph: RootedGraph, probs: dict) -> "ActivationParams":
        missing = [e.eid for e in graph.edges if e.eid not in probs]
        if missing:
            raise GraphError(f"activation probabilities missing for edges {missing}")
        return ActivationParams({e.eid: float(probs[e.eid]) for e in graph.edges})

    def p(self, eid: str) -> float:
        try:
            return self.probs[eid]
        except KeyError:
            raise GraphError(f"no activation probability for edge {eid!r}") from None

    def min_p(self) -> float:
        return min(self.probs.values())

    def uniform_p(self) -> float:
        """The common probability, when all edges share one; error otherwise."""
        values = set(self.probs.values())
        if len(values) != 1:
            raise GraphError("edge activation probabilities are not uniform")
        return values.pop()

    def as_array(self, graph: RootedGraph) -> np.ndarray:
        return np.array([self.p(e.eid) for e in graph.edges], dtype=np.float64)

    def validate_for(self, graph: RootedGraph):
        for e in graph.edges:
            self.p(e.eid)


def incident_pattern_distribution(
    graph: RootedGraph,
    params: ActivationParams,
    vertex: str,
    restriction=None,
):
    """Exact distribution of the active subset of edges at ``vertex``.

    Returns a list of ``(frozenset of edge ids, probability)`` pairs covering
    all ``2^k`` subsets of the restriction set (default: all incident edges).
    Edges outside the restriction set are marginalized out, so probabilities
    are products of per-edge Bernoulli masses and sum to one.
    """
    incident = graph.incident(vertex)
    if restriction is None:
        pool = [e.eid for e in incident]
    else:
        incident_ids = {e.eid for e in incident}
        pool = list(restriction)
        for eid in pool:
            if eid not in incident_ids:
                raise GraphError(
                    f"edge {eid!r} is not incident to vertex {vertex!r}"
                )
    k = len(pool)
    if k > PATTERN_DEGREE_CAP:
        raise CapacityError(
            f"pattern enumeration over {k} edges exceeds cap {PATTERN_DEGREE_CAP}"
        )
    out = []
    for mask in range(1 << k):
        prob = 1.0
        active = []
        for i, eid in enumerate(pool):
            pe = params.p(eid)
            if mask & (1 << i):
                prob *= pe
                active.append(eid)
            else:
                prob *= 1.0 - pe
        out.append((frozenset(active), prob))
    return out


def episode_rng(seed: int, episode: int = 0) -> np.random.Generator:
    """Counter-based generator addressed by (seed, episode).

    Distinct episodes get statistically independent streams that can be
    drawn in any order, so Monte Carlo batches parallelize without shared
    state and replay bit-identically for a fixed seed.
    """
    key = np.array([np.uint64(seed & (2**64 - 1)), np.uint64(episode)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_active_set(
    graph: RootedGraph, params: ActivationParams, rng: np.random.Generator
) -> frozenset:
    """One stage's active edge set: each edge included independently with its p_e."""
    u = rng.random(graph.n_edges)
    p = params.as_array(graph)
    return frozenset(e.eid for e, ui, pi in zip(graph.edges, u, p) if ui < pi)
