"""Hot numeric kernels: compiled with numba, with a pure-NumPy fallback.

The same source functions run either way.  At import time each kernel is
jit-compiled unless numba is unavailable or the environment variable
``SEARCHGAME_FORCE_FALLBACK`` is set (any non-empty value); the active
backend can also be switched at runtime with :func:`set_backend`, which the
equivalence tests and the benchmark use.

Kernels:

* ``solve_dp``       - least-fixed-point of the best-response dynamic
  program over (remaining-support mask, vertex) states: monotone value
  iteration from zero per layer, then exact linear-solve certification of
  the extracted greedy policy, iterated until the policy is stable.
* ``greedy_hitting`` - expected first-traversal stage of one target edge
  under that greedy policy, by layered linear solves.
* ``dfs_cycle_time_mc`` - stage-level Monte Carlo of a depth-first sweep's
  return time on a tree (the independent oracle for the cycle-time
  recursion).
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "available_backends",
    "get_backend",
    "set_backend",
    "solve_dp",
    "greedy_hitting",
    "dfs_cycle_time_mc",
]

_FORCE_FALLBACK = bool(os.environ.get("SEARCHGAME_FORCE_FALLBACK"))

try:  # pragma: no cover - exercised implicitly everywhere
    if _FORCE_FALLBACK:
        raise ImportError("fallback forced via SEARCHGAME_FORCE_FALLBACK")
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


# ---------------------------------------------------------------------------
# Kernel sources (array-only signatures so they compile unchanged)
# ---------------------------------------------------------------------------


def _solve_dp_impl(
    nV,
    pat_offset,
    pat_prob,
    act_offset,
    act_edge,
    act_dest,
    edge_slot,
    layer_mass,
    mask_order,
    vi_tol,
    vi_sweeps,
    pi_rounds,
):
    n_masks = layer_mass.shape[0]
    J = np.zeros((n_masks, nV))
    n_pat = pat_prob.shape[0]
    codes = np.full(n_pat, -3, dtype=np.int64)
    status = 0  # 0 ok, 1 policy loop did not stabilize
    x = np.zeros(nV)
    xn = np.zeros(nV)
    for oi in range(n_masks):
        m = mask_order[oi]
        if m == 0:
            continue
        em = layer_mass[m]
        for v in range(nV):
            x[v] = 0.0
        # monotone value iteration (Jacobi) from zero
        for _ in range(vi_sweeps):
            delta = 0.0
            for v in range(nV):
                tot = 0.0
                for k in range(pat_offset[v], pat_offset[v + 1]):
                    best = em + x[v]
                    for a in range(act_offset[k], act_offset[k + 1]):
                        g = act_edge[a]
                        w = act_dest[a]
                        s = edge_slot[g]
                        if s >= 0 and (m >> s) & 1:
                            q = em + J[m & ~(1 << s), w]
                        else:
                            q = em + x[w]
                        if q < best:
                            best = q
                    tot += pat_prob[k] * best
                xn[v] = tot
                d = tot - x[v]
                if d < 0.0:
                    d = -d
                if d > delta:
                    delta = d
            for v in range(nV):
                x[v] = xn[v]
            if delta <= vi_tol:
                break
        # exact certification: evaluate the greedy policy by linear solve,
        # re-extract, and stop once the exact values stop moving (distinct
        # equally-good policies share values, so code flips cannot cycle this)
        stable = False
        for rnd in range(pi_rounds):
            for v in range(nV):
                for k in range(pat_offset[v], pat_offset[v + 1]):
                    best_c = -2
                    best_q = 0.0
                    for a in range(act_offset[k], act_offset[k + 1]):
                        g = act_edge[a]
                        w = act_dest[a]
                        s = edge_slot[g]
                        if s >= 0 and (m >> s) & 1:
                            q = em + J[m & ~(1 << s), w]
                        else:
                            q = em + x[w]
                        if best_c == -2 or q < best_q:
                            best_q = q
                            best_c = a
                    stay_q = em + x[v]
                    if best_c == -2 or stay_q < best_q:
                        best_c = -1
                    codes[k] = best_c
            A = np.zeros((nV, nV))
            b = np.zeros(nV)
            for v in range(nV):
                for k in range(pat_offset[v], pat_offset[v + 1]):
                    pp = pat_prob[k]
                    b[v] += pp * em
                    c = codes[k]
                    if c < 0:
                        A[v, v] += pp
                    else:
                        g = act_edge[c]
                        w = act_dest[c]
                        s = edge_slot[g]
                        if s >= 0 and (m >> s) & 1:
                            b[v] += pp * J[m & ~(1 << s), w]
                        else:
                            A[v, w] += pp
            M = np.eye(nV) - A
            sol = np.linalg.solve(M, b)
            move = 0.0
            scale = 1.0
            for v in range(nV):
                d = sol[v] - x[v]
                if d < 0.0:
                    d = -d
                if d > move:
                    move = d
                a = sol[v] if sol[v] >= 0.0 else -sol[v]
                if a > scale:
                    scale = a
                x[v] = sol[v]
            if move <= 1e-12 * scale:
                stable = True
                break
        if not stable:
            status = 1
        for v in range(nV):
            J[m, v] = x[v]
    # Bellman residual of the returned values
    resid = 0.0
    for m in range(1, n_masks):
        em = layer_mass[m]
        for v in range(nV):
            tot = 0.0
            for k in range(pat_offset[v], pat_offset[v + 1]):
                best = em + J[m, v]
                for a in range(act_offset[k], act_offset[k + 1]):
                    g = act_edge[a]
                    w = act_dest[a]
                    s = edge_slot[g]
                    if s >= 0 and (m >> s) & 1:
                        q = em + J[m & ~(1 << s), w]
                    else:
                        q = em + J[m, w]
                    if q < best:
                        best = q
                tot += pat_prob[k] * best
            d = tot - J[m, v]
            if d < 0.0:
                d = -d
            if d > resid:
                resid = d
    return J, resid, status


def _greedy_hitting_impl(
    nV,
    root,
    pat_offset,
    pat_prob,
    act_offset,
    act_edge,
    act_dest,
    edge_slot,
    layer_mass,
    mask_order,
    J,
    target,
    fallback_row,
):
    n_masks = layer_mass.shape[0]
    T = np.zeros((n_masks, nV))
    ts = edge_slot[target]
    for oi in range(n_masks):
        m = mask_order[oi]
        if ts >= 0 and not (m >> ts) & 1:
            continue
        if m == 0:
            for v in range(nV):
                T[0, v] = fallback_row[v]
            continue
        em = layer_mass[m]
        A = np.zeros((nV, nV))
        b = np.zeros(nV)
        for v in range(nV):
            for k in range(pat_offset[v], pat_offset[v + 1]):
                pp = pat_prob[k]
                b[v] += pp
                # greedy action w.r.t. J, replicated verbatim from solve_dp
                best_c = -2
                best_q = 0.0
                for a in range(act_offset[k], act_offset[k + 1]):
                    g = act_edge[a]
                    w = act_dest[a]
                    s = edge_slot[g]
                    if s >= 0 and (m >> s) & 1:
                        q = em + J[m & ~(1 << s), w]
                    else:
                        q = em + J[m, w]
                    if best_c == -2 or q < best_q:
                        best_q = q
                        best_c = a
                stay_q = em + J[m, v]
                if best_c == -2 or stay_q < best_q:
                    best_c = -1
                if best_c < 0:
                    A[v, v] += pp
                else:
                    g = act_edge[best_c]
                    w = act_dest[best_c]
                    if g == target:
                        continue  # found this stage; only the stage cost counts
                    s = edge_slot[g]
                    if s >= 0 and (m >> s) & 1:
                        b[v] += pp * T[m & ~(1 << s), w]
                    else:
                        A[v, w] += pp
        M = np.eye(nV) - A
        sol = np.linalg.solve(M, b)
        for v in range(nV):
            T[m, v] = sol[v]
    return T[n_masks - 1, root]


def _dfs_cycle_time_mc_impl(n_episodes, seed, child_off, child_vert, parent, p):
    """Stage-by-stage depth-first sweep return times; honest waiting draws.

    At a vertex with k unsearched child edges the stage succeeds when at
    least one of k independent activation draws comes up; after the subtree
    is done the parent edge is drawn alone.  Which active child is taken
    does not affect the return-time law, so children are taken in reversed
    stored order.
    """
    np.random.seed(seed)
    nV = parent.shape[0]
    rem = np.zeros(nV, dtype=np.int64)
    total = 0.0
    total_sq = 0.0
    for _ in range(n_episodes):
        for v in range(nV):
            rem[v] = child_off[v + 1] - child_off[v]
        cur = 0  # root index
        t = 0
        while True:
            k = rem[cur]
            if k > 0:
                t += 1
                active = False
                for _i in range(k):
                    if np.random.random() < p:
                        active = True
                if active:
                    rem[cur] = k - 1
                    cur = child_vert[child_off[cur] + k - 1]
            else:
                if cur == 0:
                    break
                t += 1
                if np.random.random() < p:
                    cur = parent[cur]
        total += t
        total_sq += float(t) * float(t)
    mean = total / n_episodes
    if n_episodes > 1:
        var = (total_sq - n_episodes * mean * mean) / (n_episodes - 1)
        if var < 0.0:
            var = 0.0
        se = np.sqrt(var / n_episodes)
    else:
        se = 0.0
    return mean, se


# ---------------------------------------------------------------------------
# Backend dispatch
# ---------------------------------------------------------------------------

_IMPLS = {"numpy": {
    "solve_dp": _solve_dp_impl,
    "greedy_hitting": _greedy_hitting_impl,
    "dfs_cycle_time_mc": _dfs_cycle_time_mc_impl,
}}

if _HAVE_NUMBA:
    _IMPLS["numba"] = {
        "solve_dp": njit(cache=True)(_solve_dp_impl),
        "greedy_hitting": njit(cache=True)(_greedy_hitting_impl),
        "dfs_cycle_time_mc": njit(cache=True)(_dfs_cycle_time_mc_impl),
    }

_ACTIVE = "numba" if _HAVE_NUMBA else "numpy"


def available_backends():
    return tuple(sorted(_IMPLS))


def get_backend() -> str:
    return _ACTIVE


def set_backend(name: str):
    """Switch kernel backend; returns the previous one."""
    global _ACTIVE
    if name not in _IMPLS:
        raise ValueError(f"backend {name!r} not available (have {available_backends()})")
    prev = _ACTIVE
    _ACTIVE = name
    return prev


def solve_dp(*args):
    return _IMPLS[_ACTIVE]["solve_dp"](*args)


def greedy_hitting(*args):
    return _IMPLS[_ACTIVE]["greedy_hitting"](*args)


def dfs_cycle_time_mc(*args):
    return _IMPLS[_ACTIVE]["dfs_cycle_time_mc"](*args)
