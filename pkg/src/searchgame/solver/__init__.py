"""Exact solving: best responses, policy evaluation, certified value brackets.

Three layers:

* :func:`best_response_value` - the searcher's exact best response to a
  known hider distribution, by dynamic programming over belief states
  ``(position, remaining support)``: monotone value iteration from zero,
  certified by exact linear-solve evaluation of the extracted greedy
  policy (the exact solve is authoritative).
* :func:`policy_hitting_times` - exact per-edge expected capture stages of
  an arbitrary Markovian policy, via absorbing-chain linear solves.
* :func:`approximate_value` - a certified bracket on the game value.  The
  lower bound is the exact best-response value of an explicit hider
  distribution; the upper bound is the exact worst-edge payoff of an
  explicit mixture of searcher policies.  Candidate hider distributions
  and mixture weights come from restricted-game linear programs over the
  exact best-response payoff columns collected so far, seeded with the
  named strategies that are provably optimal on their home families; the
  loop alternates best-response oracle calls and restricted solves until
  the bracket closes below tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .. import strategies
from ..activation import ActivationParams
from ..analytic import deterministic_bounds
from ..graphs import CapacityError, GraphError, RootedGraph, chinese_postman_tours
from ._chain import UNREACHABLE, CoverageError, PolicyChain, build_chain
from . import _kernels
from ._tables import PatternTables, SupportLayout

__all__ = [
    "BestResponse",
    "best_response_value",
    "GreedyDPPolicy",
    "policy_hitting_times",
    "hider_payoff",
    "ValueCertificate",
    "approximate_value",
    "deterministic_value",
    "SolverError",
    "CoverageError",
    "UNREACHABLE",
    "PolicyChain",
    "build_chain",
]

VI_TOL = 1e-11
VI_SWEEPS = 200_000
PI_ROUNDS = 64


class SolverError(RuntimeError):
    """Numerical failure with diagnostic detail (non-convergence etc.)."""


def _tables_for(graph: RootedGraph, params: ActivationParams) -> PatternTables:
    cache = getattr(graph, "_searchgame_tables", None)
    key = tuple(sorted(params.probs.items()))
    if cache is not None and cache[0] == key:
        return cache[1]
    tables = PatternTables(graph, params)
    graph._searchgame_tables = (key, tables)
    return tables


@dataclass
class BestResponse:
    """Exact best response of the searcher to one hider distribution."""

    graph: RootedGraph
    params: ActivationParams
    hider: dict
    layout: SupportLayout
    J: np.ndarray
    residual: float
    value: float

    def expected_stages(self, vertex: str, remaining) -> float:
        """Conditional expected remaining stages from a belief state.

        ``remaining`` is the set of support edges not yet searched; the
        value is normalized by the surviving prior mass (it is the expected
        number of further stages given the hider is in ``remaining``).
        """
        mask = 0
        for eid in remaining:
            slot = self.layout.edge_slot[self.graph.edge_index(eid)]
            if slot < 0:
                raise GraphError(f"edge {eid!r} is not in the hider's support")
            mask |= 1 << int(slot)
        if mask == 0:
            return 0.0
        vi = self.graph.vertex_index(vertex)
        return float(self.J[mask, vi] / self.layout.layer_mass[mask])

    def hitting_time(self, eid: str) -> float:
        """Exact expected capture stage of ``eid`` under the greedy policy."""
        tables = _tables_for(self.graph, self.params)
        target = self.graph.edge_index(eid)
        if self.layout.edge_slot[target] < 0:
            fallback = tables.fallback_times()[:, target].copy()
        else:
            fallback = np.zeros(tables.nV)
        return float(
            _kernels.greedy_hitting(
                tables.nV,
                tables.root,
                tables.pat_offset,
                tables.pat_prob,
                tables.act_offset,
                tables.act_edge,
                tables.act_dest,
                self.layout.edge_slot,
                self.layout.layer_mass,
                self.layout.mask_order,
                self.J,
                target,
                fallback,
            )
        )

    def payoff_vector(self, edges=None) -> dict:
        edges = edges if edges is not None else self.graph.edge_ids()
        return {eid: self.hitting_time(eid) for eid in edges}

    def policy(self) -> "GreedyDPPolicy":
        return GreedyDPPolicy(self)


def best_response_value(
    graph: RootedGraph, params: ActivationParams, hider: dict, tol: float = 1e-9
) -> BestResponse:
    """Exact minimal expected capture stage against ``hider``.

    The returned object carries the full belief-state value table, the
    Bellman residual of the certified values, and the greedy policy.  The
    residual exceeding ``tol`` raises :class:`SolverError`.
    """
    strategies.validate_hider(graph, hider)
    tables = _tables_for(graph, params)
    layout = SupportLayout(tables, hider)
    J, resid, status = _kernels.solve_dp(
        tables.nV,
        tables.pat_offset,
        tables.pat_prob,
        tables.act_offset,
        tables.act_edge,
        tables.act_dest,
        layout.edge_slot,
        layout.layer_mass,
        layout.mask_order,
        VI_TOL,
        VI_SWEEPS,
        PI_ROUNDS,
    )
    if status != 0:
        raise SolverError(
            f"greedy policy failed to stabilize within {PI_ROUNDS} rounds"
        )
    if not (resid <= max(tol, 1e-9)):
        raise SolverError(f"best-response residual {resid:.3e} exceeds {tol:.3e}")
    value = float(J[layout.full_mask, tables.root])
    return BestResponse(
        graph=graph,
        params=params,
        hider=dict(hider),
        layout=layout,
        J=J,
        residual=float(resid),
        value=value,
    )


class GreedyDPPolicy(strategies.Policy):
    """The deterministic greedy policy extracted from a best response.

    Plan state is the mask of support edges not yet searched; once it
    empties (possible only when the hider actually sits outside the
    modelled support) the searcher follows the canonical covering sweep so
    that every edge is still reached.
    """

    def __init__(self, br: BestResponse):
        self.br = br
        self.graph = br.graph
        tables = _tables_for(br.graph, br.params)
        self.tables = tables
        self._routes = None

    def initial_plans(self, start, visited):
        mask = self.br.layout.full_mask
        for eid in visited:
            slot = self.br.layout.edge_slot[self.graph.edge_index(eid)]
            if slot >= 0:
                mask &= ~(1 << int(slot))
        if mask == 0:
            return [(self._fallback_plan(start), 1.0)]
        return [(mask, 1.0)]

    def _fallback_plan(self, v):
        if self._routes is None:
            from ..graphs import covering_walks_all_starts

            self._routes = covering_walks_all_starts(self.graph)
        return ("sweep", self._routes[v], 0)

    def actions(self, plan, v, visited, active):
        if isinstance(plan, tuple):
            _, route, pos = plan
            if pos >= len(route):
                return [(strategies.STAY, 1.0)]
            nxt = route[pos]
            return [(nxt, 1.0)] if nxt in active else [(strategies.STAY, 1.0)]
        m = plan
        layout = self.br.layout
        em = layout.layer_mass[m]
        J = self.br.J
        vi = self.graph.vertex_index(v)
        best_c = None
        best_q = math.inf
        # mirror the kernel's tie-breaking: incident edge order, stay last
        for e in self.graph.incident(v):
            if e.eid not in active:
                continue
            w = self.graph.vertex_index(e.other(v))
            slot = layout.edge_slot[self.graph.edge_index(e.eid)]
            if slot >= 0 and (m >> int(slot)) & 1:
                q = em + J[m & ~(1 << int(slot)), w]
            else:
                q = em + J[m, w]
            if best_c is None or q < best_q:
                best_q = q
                best_c = e.eid
        stay_q = em + J[m, vi]
        if best_c is None or stay_q < best_q:
            return [(strategies.STAY, 1.0)]
        return [(best_c, 1.0)]

    def advance(self, plan, v, visited, active, action):
        if isinstance(plan, tuple):
            _, route, pos = plan
            return (plan[0], route, pos + 1) if action is not strategies.STAY else plan
        if action is strategies.STAY:
            return plan
        m = plan
        slot = self.br.layout.edge_slot[self.graph.edge_index(action)]
        if slot >= 0:
            m &= ~(1 << int(slot))
        if m == 0:
            e = self.graph.edge(action)
            return self._fallback_plan(e.other(v))
        return m

    def describe(self):
        return {"kind": "dp-greedy", "hider": dict(self.br.hider)}


def policy_hitting_times(
    graph: RootedGraph,
    params: ActivationParams,
    policy,
    edges=None,
    start=None,
    visited=None,
) -> dict:
    """Exact expected first-traversal stage of each requested edge.

    ``start`` and ``visited`` relocate the evaluation to a continuation
    instance.  Unreachable edges map to ``math.inf``; a policy that can
    stall forever with positive probability raises :class:`CoverageError`
    naming a stalling state.
    """
    chain = build_chain(graph, params, policy, start=start, visited=visited)
    edges = edges if edges is not None else graph.edge_ids()
    return chain.hitting_times(edges)


def hider_payoff(graph, params, hider, policy, start=None, visited=None) -> float:
    """Exact expected capture stage of ``hider`` against ``policy``."""
    strategies.validate_hider(graph, hider)
    support = [e for e, m in hider.items() if m > 0]
    times = policy_hitting_times(
        graph, params, policy, edges=support, start=start, visited=visited
    )
    return sum(hider[e] * times[e] for e in support)


# ---------------------------------------------------------------------------
# Certified value bracketing
# ---------------------------------------------------------------------------


@dataclass
class ValueCertificate:
    """A certified bracket on the game value.

    ``lower`` is achieved by ``hider`` against its exact best response;
    ``upper`` is the exact worst-edge payoff of the explicit ``policy``
    mixture.  Only the gap is approximate; both endpoints come from exact
    evaluations.
    """

    lower: float
    upper: float
    hider: dict
    policy: dict
    iterations: int
    warning: bool = False
    log: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def to_json(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "gap": self.gap,
            "iterations": self.iterations,
            "hider": self.hider,
            "policy": self.policy,
            "warning": self.warning,
            "meta": self.meta,
        }


def _restricted_lp(G: np.ndarray):
    """Solve both sides of the restricted matrix game.

    ``G[j, e]``: exact expected capture stage of edge ``e`` under column
    policy ``j``.  Returns (value, column weights, hider distribution).
    """
    k, n = G.shape
    # searcher side: min u st sum_j w_j G[j,e] <= u, w in simplex
    A_ub = np.hstack([G.T, -np.ones((n, 1))])
    b_ub = np.zeros(n)
    A_eq = np.array([[1.0] * k + [0.0]])
    res = linprog(
        c=[0.0] * k + [1.0],
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=[1.0],
        bounds=[(0.0, None)] * k + [(None, None)],
        method="highs",
    )
    if not res.success:  # pragma: no cover - tiny LPs
        raise SolverError(f"restricted game LP failed: {res.message}")
    w = np.clip(res.x[:k], 0.0, None)
    w /= w.sum()
    upper = float(res.x[k])
    # hider side: max t st sum_e eps_e G[j,e] >= t, eps in simplex
    A_ub2 = np.hstack([-G, np.ones((k, 1))])
    b_ub2 = np.zeros(k)
    A_eq2 = np.array([[1.0] * n + [0.0]])
    res2 = linprog(
        c=[0.0] * n + [-1.0],
        A_ub=A_ub2,
        b_ub=b_ub2,
        A_eq=A_eq2,
        b_eq=[1.0],
        bounds=[(0.0, None)] * n + [(None, None)],
        method="highs",
    )
    if not res2.success:  # pragma: no cover
        raise SolverError(f"restricted game LP failed: {res2.message}")
    eps = np.clip(res2.x[:n], 0.0, None)
    eps /= eps.sum()
    return upper, w, eps


def _seed_policies(graph: RootedGraph, params: ActivationParams):
    """Named strategies worth offering to the restricted game upfront."""
    seeds = []
    cls = graph.classify()
    uniform_p = None
    try:
        uniform_p = params.uniform_p()
    except GraphError:
        pass
    if cls == "tree":
        seeds.append(("udfs", strategies.udfs(graph)))
        if uniform_p is not None and graph.tree_view().is_binary():
            try:
                seeds.append(("bdfs", strategies.bdfs(graph, uniform_p)))
            except GraphError:
                pass
            try:
                seeds.append(
                    ("simple-low-p", strategies.SimpleTreeLowPPolicy(graph, uniform_p))
                )
            except GraphError:
                pass
    if cls == "eulerian":
        seeds.append(("ues", strategies.UESPolicy(graph)))
    try:
        seeds.append(("parallel-uniform", strategies.ParallelUniformPolicy(graph)))
    except GraphError:
        pass
    if cls != "eulerian":
        try:
            seeds.append(("ucps", strategies.UCPSPolicy(graph)))
        except CapacityError:
            pass
    return seeds


def _seed_hiders(graph: RootedGraph, params: ActivationParams):
    from ..analytic import ebd

    seeds = [("uniform", strategies.uniform_density(graph))]
    if graph.is_tree():
        seeds.append(("leaf-uniform", strategies.leaf_uniform(graph)))
        try:
            seeds.append(("ebd", ebd(graph, params.uniform_p())))
        except GraphError:
            pass
    return seeds


def approximate_value(
    graph: RootedGraph,
    params: ActivationParams,
    tol: float = 1e-3,
    iter_cap: int = 200,
    seed_named: bool = True,
) -> ValueCertificate:
    """Certified bracket on the game value, tightened until ``gap <= tol``.

    Alternates exact best-response solves (lower bounds, new payoff
    columns) with restricted-game LPs over the collected columns (upper
    bounds, next candidate hider).  Hitting the iteration cap returns the
    best bracket found with ``warning=True`` instead of raising.
    """
    if graph.n_edges > 16:
        raise CapacityError("value bracketing limited to 16 edges")
    params.validate_for(graph)
    edge_ids = graph.edge_ids()
    n = len(edge_ids)

    columns: list[np.ndarray] = []
    descriptors: list[dict] = []
    labels: list[str] = []
    residual = 0.0

    def add_policy_column(label, policy):
        nonlocal residual
        try:
            times = policy_hitting_times(graph, params, policy)
        except (CoverageError, CapacityError):
            return
        if any(math.isinf(times[e]) for e in edge_ids):
            return
        vec = np.array([times[e] for e in edge_ids])
        for old in columns:
            if np.allclose(old, vec, rtol=0.0, atol=1e-12):
                return
        columns.append(vec)
        descriptors.append(policy.describe())
        labels.append(label)

    lower = -math.inf
    lower_witness: dict = {}
    upper = math.inf
    upper_weights = None
    log = []

    def try_hider(hider):
        nonlocal lower, lower_witness
        br = best_response_value(graph, params, hider)
        nonlocal residual
        residual = max(residual, br.residual)
        vec = np.array([br.hitting_time(e) for e in edge_ids])
        agg = float(sum(hider.get(e, 0.0) * vec[i] for i, e in enumerate(edge_ids)))
        if not math.isclose(agg, br.value, rel_tol=1e-7, abs_tol=1e-7):
            raise SolverError(
                f"best-response payoff inconsistency: {agg} vs {br.value}"
            )
        if br.value > lower:
            lower = br.value
            lower_witness = dict(hider)
        columns.append(vec)
        descriptors.append(br.policy().describe())
        labels.append("dp-greedy")
        return br.value

    if seed_named:
        for label, pol in _seed_policies(graph, params):
            add_policy_column(label, pol)
        for _, hider in _seed_hiders(graph, params):
            try_hider(hider)
    else:
        try_hider(strategies.uniform_density(graph))

    iterations = 0
    stall = 0
    for iterations in range(1, iter_cap + 1):
        G = np.vstack(columns)
        restricted_upper, w, eps = _restricted_lp(G)
        if restricted_upper < upper - 1e-15:
            upper = restricted_upper
            upper_weights = (w, len(columns))
        hider = {
            e: float(x) for e, x in zip(edge_ids, eps) if x > 1e-15
        }
        total = sum(hider.values())
        hider = {e: x / total for e, x in hider.items()}
        n_before = len(columns)
        try_hider(hider)
        log.append((iterations, lower, upper))
        if upper - lower <= tol:
            break
        if len(columns) == n_before:
            stall += 1
            if stall >= 3:
                break
        else:
            stall = 0

    warning = upper - lower > tol
    lower = min(lower, upper)  # exact closure can cross by float noise
    if upper_weights is None:  # pragma: no cover - loop always runs once
        raise SolverError("no upper bound produced")
    w, k = upper_weights
    mix = [
        {"weight": float(wi), "policy": descriptors[i], "label": labels[i]}
        for i, wi in enumerate(w[:k])
        if wi > 1e-12
    ]
    policy_desc = {"kind": "mixture", "components": mix}
    return ValueCertificate(
        lower=float(lower),
        upper=float(upper),
        hider=lower_witness,
        policy=policy_desc,
        iterations=iterations,
        warning=warning,
        log=log,
        meta={
            "lambda_weighting": "tau_edge",
            "residual": residual,
            "backend": _kernels.get_backend(),
            "n_columns": len(columns),
        },
    )


def deterministic_value(graph: RootedGraph, tol: float = 1e-9) -> ValueCertificate:
    """Certified value with every edge always active, plus structural checks.

    Asserts the bracket ``(|E|+1)/2 <= value <= |E|`` and the covering-tour
    length facts (``2|E|`` on trees, at most ``2|E| - 2`` otherwise).
    """
    if graph.n_edges > 12:
        raise CapacityError("deterministic solve limited to 12 edges")
    params = ActivationParams.uniform(graph, 1.0)
    cert = approximate_value(graph, params, tol=tol, iter_cap=400)
    lo, hi = deterministic_bounds(graph)
    lo_all, hi_all = (graph.n_edges + 1) / 2.0, float(graph.n_edges)
    if cert.upper < lo_all - 1e-6 or cert.lower > hi_all + 1e-6:
        raise SolverError(
            f"certificate [{cert.lower}, {cert.upper}] escapes "
            f"deterministic bracket [{lo_all}, {hi_all}]"
        )
    tours = chinese_postman_tours(graph)
    lengths = {len(t) for t in tours}
    if graph.is_tree():
        if lengths != {2 * graph.n_edges}:
            raise SolverError("tree covering tours must have length 2|E|")
    elif max(lengths) > 2 * graph.n_edges - 2:
        raise SolverError("covering tours must have length <= 2|E| - 2")
    cert.meta["deterministic_bounds"] = [lo, hi]
    return cert
