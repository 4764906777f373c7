"""Benchmark the compiled kernels against the pure-NumPy fallback.

Times the three hot paths on representative desk instances under both
backends and prints a speedup table:

* the best-response dynamic program (value iteration + exact certification),
* per-edge greedy hitting times,
* the depth-first cycle-time Monte Carlo oracle.

Run:  python3 benchmarks/bench_kernels.py [--repeat 5]
The fallback can also be forced globally via SEARCHGAME_FORCE_FALLBACK=1.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

import searchgame as sg
from searchgame import ActivationParams
from searchgame.solver import _kernels, best_response_value


def tree_arrays(g):
    tv = g.tree_view()
    order = [g.root] + [v for v in g.vertices if v != g.root]
    idx = {v: i for i, v in enumerate(order)}
    child_off = [0]
    child_vert = []
    for v in order:
        for e in tv.children[v]:
            child_vert.append(idx[tv.head[e]])
        child_off.append(len(child_vert))
    parent = [
        idx[tv.parent_vertex[v]] if tv.parent_vertex[v] is not None else -1
        for v in order
    ]
    return (
        np.asarray(child_off, dtype=np.int64),
        np.asarray(child_vert, dtype=np.int64),
        np.asarray(parent, dtype=np.int64),
    )


def bench_best_response(repeat):
    g = sg.line(4, 3)  # 7 edges: 128 belief layers
    params = ActivationParams.uniform(g, 0.2)
    hider = sg.uniform_density(g)

    def once():
        g._searchgame_tables = None  # defeat the table cache
        best_response_value(g, params, hider)

    return _time(once, repeat)


def bench_hitting(repeat):
    g = sg.line(4, 3)
    params = ActivationParams.uniform(g, 0.2)
    hider = sg.uniform_density(g)
    br = best_response_value(g, params, hider)

    def once():
        for e in g.edge_ids():
            br.hitting_time(e)

    return _time(once, repeat)


def bench_mc(repeat):
    g = sg.tree_from_shape("((()())((()))())")
    co, cv, par = tree_arrays(g)

    def once():
        _kernels.dfs_cycle_time_mc(100_000, 7, co, cv, par, 0.4)

    return _time(once, repeat)


def _time(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


BENCHES = [
    ("best-response DP (7 edges, p=0.2)", bench_best_response),
    ("greedy hitting times (7 targets)", bench_hitting),
    ("cycle-time MC oracle (1e5 episodes)", bench_mc),
]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = _kernels.available_backends()
    print(f"backends available: {', '.join(backends)}")
    if "numba" not in backends:
        print("numba unavailable; nothing to compare")
        return

    results = {}
    for backend in ("numba", "numpy"):
        _kernels.set_backend(backend)
        for name, bench in BENCHES:
            if backend == "numba":
                bench(1)  # compile outside the timed region
            rep = args.repeat if backend == "numba" else max(1, args.repeat // 2)
            results[(backend, name)] = bench(rep)
    _kernels.set_backend("numba")

    width = max(len(n) for n, _ in BENCHES)
    print(f"\n{'kernel'.ljust(width)}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}")
    for name, _ in BENCHES:
        a = results[("numba", name)]
        b = results[("numpy", name)]
        print(f"{name.ljust(width)}  {a * 1e3:9.2f}ms  {b * 1e3:9.2f}ms  {b / a:7.1f}x")


if __name__ == "__main__":
    main()
