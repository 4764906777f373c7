"""Exact policy evaluation via absorbing-chain hitting times.

A Markovian policy induces a finite chain on states ``(plan, position,
visited-edge set)``.  For a hider edge ``e`` the game ends the first time
the searcher traverses ``e``; the expected capture stage is the expected
absorption time of that chain, obtained from linear solves, never by fixed
point iteration.

The visited set only grows, so states are grouped by visited set and the
groups solved in decreasing coverage order; each linear system is tiny.
Stalling (a positive-probability way to avoid absorption forever) is
detected and reported rather than producing a garbage number.
"""

from __future__ import annotations

import collections
import math

import numpy as np

from ..activation import incident_pattern_distribution
from ..graphs import CapacityError, GraphError

__all__ = ["PolicyChain", "build_chain", "CoverageError", "UNREACHABLE"]

STATE_CAP = 10**6

UNREACHABLE = math.inf


class CoverageError(RuntimeError):
    """The policy can stall forever with positive probability."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class PolicyChain:
    """Reachable-state transition structure of one policy on one instance."""

    def __init__(self, graph, params, policy, start=None, visited=None):
        self.graph = graph
        self.params = params
        self.policy = policy
        self.start_vertex = start if start is not None else graph.root
        visited = frozenset(visited or ())
        for eid in visited:
            graph.edge(eid)
        self.initial_visited = visited

        self._patterns = {
            v: incident_pattern_distribution(graph, params, v)
            for v in graph.vertices
        }
        self._build()

    def _build(self):
        g = self.graph
        pol = self.policy
        index: dict = {}
        states: list = []
        trans: list = []

        def intern(state):
            if state not in index:
                index[state] = len(states)
                states.append(state)
                trans.append(None)
                if len(states) > STATE_CAP:
                    raise CapacityError(
                        f"policy chain exceeds {STATE_CAP} states"
                    )
            return index[state]

        start_dist = []
        for plan, prob in pol.initial_plans(self.start_vertex, self.initial_visited):
            s = intern((plan, self.start_vertex, self.initial_visited))
            start_dist.append((s, prob))

        queue = collections.deque(i for i, _ in start_dist)
        seen_q = {i for i, _ in start_dist}
        while queue:
            si = queue.popleft()
            if trans[si] is not None:
                continue
            plan, v, visited = states[si]
            out = []
            for active, pprob in self._patterns[v]:
                if pprob == 0.0:
                    continue
                for action, aprob in pol.actions(plan, v, visited, active):
                    prob = pprob * aprob
                    if prob == 0.0:
                        continue
                    if action is None:
                        nplan = pol.advance(plan, v, visited, active, None)
                        ti = intern((nplan, v, visited))
                        out.append((prob, None, ti))
                    else:
                        e = g.edge(action)
                        if action not in active or not e.touches(v):
                            raise GraphError(
                                f"policy proposed infeasible action {action!r} at {v!r}"
                            )
                        w = e.other(v)
                        nvis = visited | {action}
                        nplan = pol.advance(plan, v, visited, active, action)
                        ti = intern((nplan, w, nvis))
                        out.append((prob, action, ti))
                    if ti not in seen_q:
                        seen_q.add(ti)
                        queue.append(ti)
            trans[si] = out

        self.states = states
        self.trans = trans
        self.start_dist = start_dist

    # -- hitting times ---------------------------------------------------

    def _absorption_analysis(self, target):
        """Reachable-without-absorption set and its absorption-capable part."""
        n = len(self.states)
        fwd = [[] for _ in range(n)]
        has_abs = [False] * n
        for i, out in enumerate(self.trans):
            for prob, crossed, j in out:
                if crossed == target:
                    has_abs[i] = True
                else:
                    fwd[i].append(j)
        reach = set()
        stack = [i for i, _ in self.start_dist]
        while stack:
            i = stack.pop()
            if i in reach:
                continue
            reach.add(i)
            stack.extend(j for j in fwd[i] if j not in reach)
        abs_states = {i for i in reach if has_abs[i]}
        if not abs_states:
            return reach, set()
        back = [[] for _ in range(n)]
        for i in reach:
            for j in fwd[i]:
                if j in reach:
                    back[j].append(i)
        can = set(abs_states)
        stack = list(abs_states)
        while stack:
            j = stack.pop()
            for i in back[j]:
                if i not in can:
                    can.add(i)
                    stack.append(i)
        return reach, can

    def hitting_time(self, target: str) -> float:
        """Expected first stage at which ``target`` is traversed.

        Returns ``math.inf`` when the policy can never traverse the target;
        raises :class:`CoverageError` when it does so only with probability
        strictly between zero and one (expected time infinite by stalling).
        """
        self.graph.edge(target)
        reach, can = self._absorption_analysis(target)
        if not can:
            return UNREACHABLE
        stray = reach - can
        if stray:
            state = self.states[next(iter(stray))]
            raise CoverageError(
                f"policy may stall forever before traversing {target!r} "
                f"(e.g. from state {state!r})",
                state=state,
            )
        # group reachable states by visited set, solve largest coverage first
        groups: dict = collections.defaultdict(list)
        for i in reach:
            groups[self.states[i][2]].append(i)
        order = sorted(groups, key=lambda vis: (-len(vis), tuple(sorted(vis))))
        T = {}
        for vis in order:
            members = groups[vis]
            loc = {i: k for k, i in enumerate(members)}
            m = len(members)
            A = np.zeros((m, m))
            b = np.ones(m)
            for i in members:
                k = loc[i]
                for prob, crossed, j in self.trans[i]:
                    if crossed == target:
                        continue
                    if j in loc:
                        A[k, loc[j]] += prob
                    else:
                        b[k] += prob * T[j]
            x = np.linalg.solve(np.eye(m) - A, b)
            for i in members:
                T[i] = float(x[loc[i]])
        return sum(prob * T[i] for i, prob in self.start_dist)

    def hitting_times(self, targets) -> dict:
        return {t: self.hitting_time(t) for t in targets}


def build_chain(graph, params, policy, start=None, visited=None) -> PolicyChain:
    return PolicyChain(graph, params, policy, start=start, visited=visited)
