"""Flattened array form of an instance, shared by the accelerated kernels.

The dynamic program and its hitting-time companion run over states
``(remaining-support mask, vertex)``.  Everything they touch is packed into
plain integer/float arrays here so the same kernel source can run compiled
(numba) or interpreted (numpy fallback):

* per-vertex activation patterns: for each vertex, all ``2^deg`` subsets of
  its incident edges with their probabilities, flattened with offset arrays;
* per-pattern action lists: the active incident edges of that pattern, as
  (global edge index, destination vertex index) pairs (staying is implicit);
* the canonical covering-route fallback times used once the belief support
  is exhausted.
"""

from __future__ import annotations

import numpy as np

from ..graphs import CapacityError, RootedGraph, covering_walks_all_starts

__all__ = ["PatternTables", "SupportLayout"]

DP_DEGREE_CAP = 16


class PatternTables:
    """Instance-level arrays: graph topology and activation patterns."""

    def __init__(self, graph: RootedGraph, params):
        params.validate_for(graph)
        self.graph = graph
        self.params = params
        nV = graph.n_vertices
        nE = graph.n_edges
        self.nV = nV
        self.nE = nE
        self.root = graph.vertex_index(graph.root)
        self.edge_p = params.as_array(graph)

        pat_offset = [0]
        pat_prob = []
        act_offset = [0]
        act_edge = []
        act_dest = []
        for v in graph.vertices:
            inc = graph.incident(v)
            deg = len(inc)
            if deg > DP_DEGREE_CAP:
                raise CapacityError(
                    f"vertex {v!r} has degree {deg} > {DP_DEGREE_CAP}"
                )
            vi_probs = [params.p(e.eid) for e in inc]
            dests = [graph.vertex_index(e.other(v)) for e in inc]
            eidx = [graph.edge_index(e.eid) for e in inc]
            for mask in range(1 << deg):
                prob = 1.0
                for i in range(deg):
                    prob *= vi_probs[i] if mask & (1 << i) else 1.0 - vi_probs[i]
                pat_prob.append(prob)
                for i in range(deg):
                    if mask & (1 << i):
                        act_edge.append(eidx[i])
                        act_dest.append(dests[i])
                act_offset.append(len(act_edge))
            pat_offset.append(len(pat_prob))

        self.pat_offset = np.asarray(pat_offset, dtype=np.int64)
        self.pat_prob = np.asarray(pat_prob, dtype=np.float64)
        self.act_offset = np.asarray(act_offset, dtype=np.int64)
        self.act_edge = np.asarray(act_edge, dtype=np.int64)
        self.act_dest = np.asarray(act_dest, dtype=np.int64)
        self._fallback_times = None

    def fallback_times(self) -> np.ndarray:
        """fallback_times[v, e]: expected stages to first cross edge ``e``
        when sweeping the canonical covering route from vertex ``v``
        (each route edge crossed after a geometric wait)."""
        if self._fallback_times is None:
            out = np.zeros((self.nV, self.nE))
            routes = covering_walks_all_starts(self.graph)
            for vi, v in enumerate(self.graph.vertices):
                route = routes[v]
                t = 0.0
                seen = set()
                for eid in route:
                    t += 1.0 / self.params.p(eid)
                    if eid not in seen:
                        seen.add(eid)
                        out[vi, self.graph.edge_index(eid)] = t
            self._fallback_times = out
        return self._fallback_times


class SupportLayout:
    """Support-dependent arrays: slots, masses and mask bookkeeping."""

    def __init__(self, tables: PatternTables, hider: dict, support_cap: int = 16):
        graph = tables.graph
        items = [
            (graph.edge_index(eid), eid, float(mass))
            for eid, mass in hider.items()
            if mass > 0.0
        ]
        items.sort()
        if not items:
            raise CapacityError("hider distribution has empty support")
        if len(items) > support_cap:
            raise CapacityError(
                f"support of size {len(items)} exceeds cap {support_cap}"
            )
        self.tables = tables
        self.support_eids = tuple(eid for _, eid, _ in items)
        self.slot_edge = np.asarray([gi for gi, _, _ in items], dtype=np.int64)
        self.eps = np.asarray([m for _, _, m in items], dtype=np.float64)
        edge_slot = np.full(tables.nE, -1, dtype=np.int64)
        for slot, (gi, _, _) in enumerate(items):
            edge_slot[gi] = slot
        self.edge_slot = edge_slot

        s = len(items)
        self.n_slots = s
        n_masks = 1 << s
        layer_mass = np.zeros(n_masks)
        for m in range(1, n_masks):
            low = m & -m
            layer_mass[m] = layer_mass[m ^ low] + self.eps[low.bit_length() - 1]
        self.layer_mass = layer_mass
        pc = np.asarray([m.bit_count() for m in range(n_masks)], dtype=np.int64)
        self.mask_order = np.argsort(pc, kind="stable").astype(np.int64)
        self.full_mask = n_masks - 1
