"""Command line surface.

Verbs: ``gen`` writes an instance file; ``classify``, ``bounds``,
``analytic``, ``ebd`` answer structural/analytic queries; ``value`` runs the
certified solver; ``best-response`` and ``evaluate`` compute exact
responses/payoffs; ``simulate`` runs Monte Carlo; ``repro`` replays the
whole acceptance suite and exits nonzero on any failure.

The instance comes from ``--graph FILE``, ``--gen SPEC``, or standard input
(JSON), so generation pipes into the other verbs.  ``--p`` overrides every
edge's activation probability uniformly; heterogeneous probabilities come
only from the instance file.  All floats print with 12 significant digits.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import analytic, simulate, strategies
from .acceptance import run_all
from .activation import ActivationParams
from .graphs import (
    CapacityError,
    GraphError,
    RootedGraph,
    circle,
    dump_instance,
    line,
    load_instance,
    parallel,
    simple_binary_tree,
    tree_from_shape,
)
from .solver import (
    CoverageError,
    SolverError,
    approximate_value,
    best_response_value,
    policy_hitting_times,
)

USER_ERRORS = (GraphError, CapacityError, SolverError, CoverageError, ValueError)


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return format(x, ".12g")
    return str(x)


def _print_table(rows, out=None):
    out = out if out is not None else sys.stdout
    widths = [max(len(_fmt(r[i])) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        print("  ".join(_fmt(c).ljust(w) for c, w in zip(r, widths)).rstrip(), file=out)


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return _fmt(x)


def _emit(doc, rows, fmt):
    if fmt == "json":
        print(json.dumps(doc, indent=2, default=_json_default))
    else:
        _print_table(rows)


def parse_gen_spec(spec: str) -> RootedGraph:
    """Build a generator graph from ``family:args`` (or positional words)."""
    if ":" in spec:
        family, _, arg = spec.partition(":")
        parts = [s for s in arg.split(",") if s]
    else:
        words = spec.split()
        family, parts = words[0], words[1:]
    family = family.strip()
    if family == "line":
        if len(parts) != 2:
            raise GraphError("line takes two arm lengths, e.g. line:3,2")
        return line(int(parts[0]), int(parts[1]))
    if family == "circle":
        if len(parts) != 1:
            raise GraphError("circle takes one length, e.g. circle:4")
        return circle(int(parts[0]))
    if family == "parallel":
        return parallel(tuple(int(x) for x in parts))
    if family == "simple-binary-tree":
        return simple_binary_tree()
    if family == "tree":
        if not parts:
            raise GraphError("tree takes a shape, e.g. tree:(()(()()))")
        return tree_from_shape(",".join(parts))
    raise GraphError(f"unknown generator family {family!r}")


def _load(args):
    if args.gen:
        graph = parse_gen_spec(args.gen)
        probs = {}
    elif args.graph:
        with open(args.graph, "r", encoding="utf-8") as fh:
            graph, probs = load_instance(fh.read())
    else:
        text = sys.stdin.read()
        if not text.strip():
            raise GraphError("no instance: use --graph, --gen, or pipe JSON")
        graph, probs = load_instance(text)
    if args.p is not None:
        params = ActivationParams.uniform(graph, args.p)
    elif probs:
        params = ActivationParams.from_map(graph, probs)
    else:
        params = ActivationParams.uniform(graph, 1.0)
    return graph, params


def _parse_hider(graph, params, text):
    if text in ("uniform", None):
        return strategies.uniform_density(graph)
    if text == "leaf-uniform":
        return strategies.leaf_uniform(graph)
    if text == "ebd":
        return analytic.ebd(graph, params.uniform_p())
    if text.startswith("@"):
        with open(text[1:], "r", encoding="utf-8") as fh:
            dist = json.load(fh)
    else:
        dist = json.loads(text)
    return strategies.validate_hider(graph, {str(k): float(v) for k, v in dist.items()})


def _parse_policy(graph, params, text):
    if text.startswith("@"):
        with open(text[1:], "r", encoding="utf-8") as fh:
            desc = json.load(fh)
    elif text.startswith("{"):
        desc = json.loads(text)
    else:
        desc = {"kind": text}
    return strategies.build_policy(graph, params, desc)


def cmd_gen(args):
    graph = parse_gen_spec(" ".join(args.spec))
    p = args.p if args.p is not None else 1.0
    probs = {e.eid: p for e in graph.edges}
    print(dump_instance(graph, probs))
    return 0


def cmd_classify(args):
    graph, _ = _load(args)
    cls = graph.classify()
    _emit({"class": cls}, [("class", cls)], args.format)
    return 0


def cmd_bounds(args):
    graph, params = _load(args)
    lo1, hi1 = analytic.deterministic_bounds(graph)
    lo, hi = analytic.stochastic_bounds(graph, params)
    doc = {
        "deterministic": {"lower": lo1, "upper": hi1},
        "stochastic": {"lower": lo, "upper": hi},
    }
    rows = [
        ("deterministic-lower", lo1),
        ("deterministic-upper", hi1),
        ("stochastic-lower", lo),
        ("stochastic-upper", hi),
    ]
    _emit(doc, rows, args.format)
    return 0


def cmd_analytic(args):
    graph, params = _load(args)
    p = params.uniform_p()
    want = args.quantity
    doc: dict = {"p": p}
    rows = [("p", p)]
    if graph.is_tree():
        ana = analytic.cycle_time_tree(graph, p)
        doc["tau_root"] = ana.tau_root()
        doc["tau_edge"] = ana.tau_edge
        rows.append(("tau(root)", ana.tau_root()))
        if graph.tree_view().is_binary():
            ana = analytic.lambda_tree(graph, p)
            doc["lambda_root"] = ana.lambda_root()
            doc["leaf_time"] = ana.leaf_time()
            rows.append(("Lambda(root)", ana.lambda_root()))
            rows.append(("tau/2+Lambda", ana.leaf_time()))
    try:
        desc = strategies.parallel_structure(graph)
    except GraphError:
        desc = None
    if desc is not None and len(desc.lams) % 2 == 0:
        theta = analytic.theta_parallel(desc.lams, p)
        m = len(desc.lams) // 2
        doc["theta"] = theta
        doc["phi"] = analytic.phi(m, p)
        doc["edge_time"] = analytic.parallel_edge_time(desc.lams, p)
        rows.append(("theta", theta))
        rows.append((f"phi_{m}", doc["phi"]))
        rows.append(("(theta+1/p)/2+phi", doc["edge_time"]))
    cf = _closed_form_for(graph, p)
    if cf is not None:
        doc["closed_form"] = cf.value
        doc["closed_form_formula"] = cf.formula
        rows.append(("closed-form value", cf.value))
    if want:
        keymap = {
            "tau": "tau_root",
            "lambda": "lambda_root",
            "theta": "theta",
            "phi": "phi",
            "closed-form": "closed_form",
        }
        field = keymap[want]
        if field not in doc:
            raise GraphError(f"{want!r} is not defined for this instance")
        doc = {"p": p, field: doc[field]}
        rows = [("p", p), (want, doc[field])]
    _emit(doc, rows, args.format)
    return 0


def _closed_form_for(graph, p):
    fam = graph.meta.get("family")
    try:
        if fam == "line":
            l1, l2 = graph.meta["lams"]
            return analytic.closed_form_value("line", {"lam1": l1, "lam2": l2}, p)
        if fam == "circle":
            return analytic.closed_form_value("circle", {"edges": graph.n_edges}, p)
        if fam == "simple-binary-tree":
            return analytic.closed_form_value("simple-binary-tree", {}, p)
    except GraphError:
        return None
    return None


def cmd_ebd(args):
    graph, params = _load(args)
    dist = analytic.ebd(graph, params.uniform_p())
    rows = [(e, dist[e]) for e in sorted(dist)]
    _emit({"ebd": dist}, rows, args.format)
    return 0


def cmd_value(args):
    graph, params = _load(args)
    cert = approximate_value(graph, params, tol=args.tol, iter_cap=args.iter_cap)
    doc = cert.to_json()
    rows = [
        ("lower", cert.lower),
        ("upper", cert.upper),
        ("gap", cert.gap),
        ("midpoint", cert.midpoint),
        ("iterations", cert.iterations),
        ("warning", cert.warning),
    ]
    _emit(doc, rows, args.format)
    return 0 if not cert.warning else 1


def cmd_best_response(args):
    graph, params = _load(args)
    hider = _parse_hider(graph, params, args.hider)
    br = best_response_value(graph, params, hider)
    doc = {
        "value": br.value,
        "residual": br.residual,
        "hitting_times": {e: br.hitting_time(e) for e in graph.edge_ids()},
    }
    rows = [("value", br.value), ("residual", br.residual)] + [
        (f"t({e})", t) for e, t in doc["hitting_times"].items()
    ]
    _emit(doc, rows, args.format)
    return 0


def cmd_evaluate(args):
    graph, params = _load(args)
    hider = _parse_hider(graph, params, args.hider)
    policy = _parse_policy(graph, params, args.policy)
    support = sorted(e for e, m in hider.items() if m > 0)
    times = policy_hitting_times(graph, params, policy, edges=support)
    total = sum(hider[e] * times[e] for e in support)
    doc = {"payoff": total, "hitting_times": times}
    rows = [("payoff", total)] + [(f"t({e})", times[e]) for e in support]
    _emit(doc, rows, args.format)
    return 0


def cmd_simulate(args):
    graph, params = _load(args)
    hider = _parse_hider(graph, params, args.hider)
    policy = _parse_policy(graph, params, args.policy)
    rep = simulate.monte_carlo(
        graph, params, hider, policy, n=args.n, seed=args.seed, jobs=args.jobs
    )
    doc = rep.to_json()
    rows = [(k, doc[k]) for k in ("mean", "se", "n", "seed", "censored")]
    _emit(doc, rows, args.format)
    return 0


def cmd_repro(args):
    rows = run_all(only=args.only or None)
    out = []
    all_ok = True
    for r in rows:
        all_ok &= r.passed
        out.append(("PASS" if r.passed else "FAIL", r.key, f"{r.elapsed:.1f}s", r.detail))
    if args.format == "json":
        print(
            json.dumps(
                [
                    {
                        "key": r.key,
                        "passed": r.passed,
                        "elapsed": r.elapsed,
                        "detail": r.detail,
                    }
                    for r in rows
                ],
                indent=2,
            )
        )
    else:
        _print_table(out)
    return 0 if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="searchgame",
        description="Search games on graphs with randomly active edges",
    )
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(sp, tol=False, sim=False, hider=False, policy=False):
        sp.add_argument("--graph", help="instance JSON file")
        sp.add_argument("--gen", help="generator spec, e.g. line:3,2")
        sp.add_argument("--p", type=float, help="override all activation probabilities")
        sp.add_argument(
            "--format", choices=("json", "table"), default="table", dest="format"
        )
        if tol:
            sp.add_argument("--tol", type=float, default=1e-3)
            sp.add_argument("--iter-cap", type=int, default=200)
        if sim:
            sp.add_argument("--n", type=int, default=10_000)
            sp.add_argument("--seed", type=int, default=0)
            sp.add_argument("--jobs", type=int, default=1)
        if hider:
            sp.add_argument(
                "--hider",
                default="uniform",
                help="uniform | leaf-uniform | ebd | inline JSON | @file",
            )
        if policy:
            sp.add_argument(
                "--policy",
                required=True,
                help="policy kind, inline JSON descriptor, or @file",
            )

    g = sub.add_parser("gen", help="emit an instance JSON")
    g.add_argument("spec", nargs="+", help="family spec, e.g. line:3,2 or 'line 3 2'")
    g.add_argument("--p", type=float, help="activation probability for every edge")
    g.set_defaults(fn=cmd_gen)

    for name, fn, opts in [
        ("classify", cmd_classify, {}),
        ("bounds", cmd_bounds, {}),
        ("ebd", cmd_ebd, {}),
        ("value", cmd_value, {"tol": True}),
        ("best-response", cmd_best_response, {"hider": True}),
        ("evaluate", cmd_evaluate, {"hider": True, "policy": True}),
        ("simulate", cmd_simulate, {"sim": True, "hider": True, "policy": True}),
    ]:
        sp = sub.add_parser(name)
        common(sp, **opts)
        sp.set_defaults(fn=fn)

    an = sub.add_parser("analytic", help="closed-form quantities")
    common(an)
    an.add_argument(
        "--quantity",
        choices=("tau", "lambda", "theta", "phi", "closed-form"),
        help="report one quantity; errors when undefined for the instance",
    )
    an.set_defaults(fn=cmd_analytic)

    r = sub.add_parser("repro", help="run the acceptance suite")
    r.add_argument("--only", nargs="*", help="filter criteria by key substring")
    r.add_argument("--format", choices=("json", "table"), default="table")
    r.set_defaults(fn=cmd_repro)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
