"""Rooted multigraphs: the arenas the search games are played on.

A :class:`RootedGraph` is a finite connected undirected multigraph with a
distinguished root vertex.  Edges are first-class objects with stable string
identifiers, because hiding places are edges: every API in the package keys
on edge ids, never on endpoint pairs (parallel edges are legal and must stay
distinguishable).  Self-loops are rejected at construction.

Besides the data type, this module provides:

* classification into ``tree`` / ``eulerian`` / ``other``,
* :class:`TreeView`, the root-oriented view of a tree (parents, children,
  subtree edge sets, leaf edges),
* exhaustive enumeration of minimum-length closed covering walks
  (:func:`chinese_postman_tours`) and of Eulerian circuits
  (:func:`eulerian_cycles`) at desk scale,
* generators for the standard families (line, circle, parallel graph,
  simple binary tree, arbitrary tree shapes) plus seeded random graphs
  used by the test and acceptance suites.
"""

from __future__ import annotations

import collections
import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GraphError",
    "CapacityError",
    "Edge",
    "RootedGraph",
    "TreeView",
    "ParallelDescriptor",
    "neighbors",
    "classify",
    "chinese_postman_tours",
    "eulerian_cycles",
    "min_cover_walk_length",
    "covering_walk_from",
    "line",
    "circle",
    "parallel",
    "simple_binary_tree",
    "tree_from_shape",
    "counterexample_tree",
    "random_tree",
    "random_binary_tree",
    "random_connected_multigraph",
    "load_instance",
    "dump_instance",
]

MAX_ENUMERATION_EDGES = 12


class GraphError(ValueError):
    """Domain error: the input violates a structural precondition."""


class CapacityError(RuntimeError):
    """The instance is too large for an exact/exhaustive operation."""


@dataclass(frozen=True)
class Edge:
    """An undirected edge with a stable identifier.

    ``u`` and ``v`` are endpoint names; the pair is unordered (orientation,
    where needed, lives in :class:`TreeView`).
    """

    eid: str
    u: str
    v: str

    def other(self, w: str) -> str:
        """Endpoint opposite to ``w``."""
        if w == self.u:
            return self.v
        if w == self.v:
            return self.u
        raise GraphError(f"vertex {w!r} is not an endpoint of edge {self.eid!r}")

    def touches(self, w: str) -> bool:
        return w == self.u or w == self.v

    @property
    def ends(self) -> frozenset[str]:
        return frozenset((self.u, self.v))


class RootedGraph:
    """Finite connected undirected multigraph with a distinguished root.

    Immutable after construction; safe to share between workers.

    Attributes:
        vertices: tuple of vertex names, in construction order.
        edges: tuple of :class:`Edge`, in construction order (this order is
            the canonical edge order used for indexing everywhere).
        root: name of the root vertex.
    """

    def __init__(self, vertices, edges, root, meta=None):
        vertices = tuple(vertices)
        if not vertices:
            raise GraphError("vertex set must be nonempty")
        if len(set(vertices)) != len(vertices):
            raise GraphError("duplicate vertex names")
        norm_edges = []
        for e in edges:
            if not isinstance(e, Edge):
                eid, u, v = e
                e = Edge(str(eid), str(u), str(v))
            norm_edges.append(e)
        if not norm_edges:
            raise GraphError("edge set must be nonempty")
        ids = [e.eid for e in norm_edges]
        if len(set(ids)) != len(ids):
            raise GraphError("duplicate edge identifiers")
        vset = set(vertices)
        for e in norm_edges:
            if e.u not in vset or e.v not in vset:
                raise GraphError(f"edge {e.eid!r} has an unknown endpoint")
            if e.u == e.v:
                raise GraphError(f"edge {e.eid!r} is a self-loop")
        if root not in vset:
            raise GraphError(f"root {root!r} is not a vertex")

        self.vertices = vertices
        self.edges = tuple(norm_edges)
        self.root = root
        self.meta = dict(meta) if meta else {}

        self._edge_by_id = {e.eid: e for e in self.edges}
        self._edge_index = {e.eid: i for i, e in enumerate(self.edges)}
        self._vertex_index = {v: i for i, v in enumerate(vertices)}
        inc: dict[str, list[Edge]] = {v: [] for v in vertices}
        for e in self.edges:
            inc[e.u].append(e)
            inc[e.v].append(e)
        self._incident = {v: tuple(es) for v, es in inc.items()}
        self._check_connected()

    def _check_connected(self):
        seen = {self.root}
        stack = [self.root]
        while stack:
            v = stack.pop()
            for e in self._incident[v]:
                w = e.other(v)
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != len(self.vertices):
            raise GraphError("graph is not connected")

    # -- basic queries -------------------------------------------------

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def edge(self, eid: str) -> Edge:
        try:
            return self._edge_by_id[eid]
        except KeyError:
            raise GraphError(f"unknown edge {eid!r}") from None

    def edge_index(self, eid: str) -> int:
        try:
            return self._edge_index[eid]
        except KeyError:
            raise GraphError(f"unknown edge {eid!r}") from None

    def vertex_index(self, v: str) -> int:
        try:
            return self._vertex_index[v]
        except KeyError:
            raise GraphError(f"unknown vertex {v!r}") from None

    def incident(self, v: str) -> tuple[Edge, ...]:
        try:
            return self._incident[v]
        except KeyError:
            raise GraphError(f"unknown vertex {v!r}") from None

    def degree(self, v: str) -> int:
        return len(self.incident(v))

    def max_degree(self) -> int:
        return max(len(es) for es in self._incident.values())

    def edge_ids(self) -> tuple[str, ...]:
        return tuple(e.eid for e in self.edges)

    # -- classification ------------------------------------------------

    def is_tree(self) -> bool:
        return self.n_edges == self.n_vertices - 1

    def is_eulerian(self) -> bool:
        return all(self.degree(v) % 2 == 0 for v in self.vertices)

    def classify(self) -> str:
        """``tree`` / ``eulerian`` / ``other`` (trees win on the overlap)."""
        if self.is_tree():
            return "tree"
        if self.is_eulerian():
            return "eulerian"
        return "other"

    def tree_view(self) -> "TreeView":
        if not self.is_tree():
            raise GraphError("graph is not a tree")
        return TreeView.build(self)

    def __repr__(self):
        return (
            f"RootedGraph(|V|={self.n_vertices}, |E|={self.n_edges}, "
            f"root={self.root!r}, class={self.classify()})"
        )


def neighbors(graph: RootedGraph, active_edge_ids, v: str) -> set[str]:
    """Vertices reachable from ``v`` this stage, waiting included.

    Returns ``{v}`` united with the far endpoints of active edges incident
    to ``v``.  The result always contains ``v``: staying put is available
    under every activation pattern.
    """
    active = set(active_edge_ids)
    out = {v}
    for e in graph.incident(v):
        if e.eid in active:
            out.add(e.other(v))
    return out


def classify(graph: RootedGraph) -> str:
    return graph.classify()


@dataclass(frozen=True)
class TreeView:
    """Root-oriented view of a tree.

    Every edge is oriented away from the root.  ``head(e)`` is the endpoint
    of ``e`` farther from the root, ``tail(e)`` the nearer one.  ``E_v``
    (``subtree_edges_vertex``) is the edge set of the maximal subtree below
    vertex ``v``; ``E_e`` (``subtree_edges_edge``) additionally includes
    ``e`` itself, so ``|E_e| = 1 + sum over child edges below head(e)``.
    """

    graph: RootedGraph
    parent_edge: dict
    parent_vertex: dict
    children: dict
    head: dict
    tail: dict
    subtree_edges_vertex: dict
    subtree_edges_edge: dict
    leaf_edges: tuple

    @staticmethod
    def build(graph: RootedGraph) -> "TreeView":
        parent_edge: dict[str, str | None] = {graph.root: None}
        parent_vertex: dict[str, str | None] = {graph.root: None}
        children: dict[str, list[str]] = {v: [] for v in graph.vertices}
        head: dict[str, str] = {}
        tail: dict[str, str] = {}
        order = [graph.root]
        seen = {graph.root}
        queue = collections.deque([graph.root])
        while queue:
            v = queue.popleft()
            for e in graph.incident(v):
                w = e.other(v)
                if w in seen:
                    continue
                seen.add(w)
                parent_edge[w] = e.eid
                parent_vertex[w] = v
                children[v].append(e.eid)
                head[e.eid] = w
                tail[e.eid] = v
                order.append(w)
                queue.append(w)
        # children listed in the graph's canonical edge order
        for v in children:
            children[v].sort(key=graph.edge_index)

        sub_v: dict[str, frozenset] = {}
        sub_e: dict[str, frozenset] = {}
        for v in reversed(order):
            acc: set[str] = set()
            for eid in children[v]:
                acc |= sub_e[eid]
            sub_v[v] = frozenset(acc)
            pe = parent_edge[v]
            if pe is not None:
                sub_e[pe] = frozenset(acc | {pe})
        leaf_edges = tuple(
            e.eid for e in graph.edges if not children[head[e.eid]]
        )
        return TreeView(
            graph=graph,
            parent_edge=parent_edge,
            parent_vertex=parent_vertex,
            children={v: tuple(c) for v, c in children.items()},
            head=head,
            tail=tail,
            subtree_edges_vertex=sub_v,
            subtree_edges_edge=sub_e,
            leaf_edges=leaf_edges,
        )

    def is_binary(self) -> bool:
        return all(len(c) <= 2 for c in self.children.values())

    def branching_vertices(self) -> tuple:
        return tuple(v for v in self.graph.vertices if len(self.children[v]) >= 2)

    def path_to_edge(self, start: str, eid: str) -> tuple:
        """Edge sequence of the unique walk from ``start`` through ``eid``.

        The walk runs from ``start`` to the tail of ``eid`` along tree edges
        and ends by traversing ``eid`` itself.
        """
        self.graph.edge(eid)

        def chain(v):
            names = [v]
            while self.parent_vertex[names[-1]] is not None:
                names.append(self.parent_vertex[names[-1]])
            return names

        a = chain(start)  # start .. root
        b = chain(self.tail[eid])  # tail .. root
        bset = set(b)
        lca = next(v for v in a if v in bset)
        seq = [self.parent_edge[v] for v in a[: a.index(lca)]]
        seq += [self.parent_edge[v] for v in reversed(b[: b.index(lca)])]
        seq.append(eid)
        return tuple(seq)


@dataclass(frozen=True)
class ParallelDescriptor:
    """Shape of a parallel graph: paths of lengths ``lams`` joining O to D."""

    lams: tuple
    origin: str
    terminal: str
    path_edges: tuple  # tuple per path: edge ids from origin to terminal

    @property
    def n_paths(self) -> int:
        return len(self.lams)


# ---------------------------------------------------------------------------
# Covering walks and Eulerian circuits
# ---------------------------------------------------------------------------


def _cover_state_search(graph: RootedGraph, start: str):
    """Forward BFS over (vertex, covered-edge-set) states from ``start``.

    Returns dist array indexed [vertex][mask] with minimal walk length
    reaching that state.  Unit edge lengths make plain BFS exact.
    """
    nE = graph.n_edges
    nV = graph.n_vertices
    full = (1 << nE) - 1
    dist = np.full((nV, full + 1), -1, dtype=np.int32)
    s = graph.vertex_index(start)
    dist[s, 0] = 0
    queue = collections.deque([(s, 0)])
    vid = graph.vertex_index
    while queue:
        v, mask = queue.popleft()
        d = dist[v, mask] + 1
        for e in graph.incident(graph.vertices[v]):
            w = vid(e.other(graph.vertices[v]))
            m2 = mask | (1 << graph.edge_index(e.eid))
            if dist[w, m2] < 0:
                dist[w, m2] = d
                queue.append((w, m2))
    return dist


def _finish_distance(graph: RootedGraph, return_to_root: bool):
    """Backward BFS: h[v][mask] = minimal extra steps to cover the rest.

    With ``return_to_root`` the walk must additionally end at the root;
    otherwise the endpoint is free.
    """
    nE = graph.n_edges
    nV = graph.n_vertices
    full = (1 << nE) - 1
    h = np.full((nV, full + 1), -1, dtype=np.int32)
    queue = collections.deque()
    if return_to_root:
        r = graph.vertex_index(graph.root)
        h[r, full] = 0
        queue.append((r, full))
    else:
        for v in range(nV):
            h[v, full] = 0
            queue.append((v, full))
    vid = graph.vertex_index
    # reversed transition: (v, m) --e--> (w, m | bit)  becomes predecessor
    # (v, m) of (w, m2) where m is m2 or m2 without the bit
    while queue:
        w, m2 = queue.popleft()
        d = h[w, m2] + 1
        wname = graph.vertices[w]
        for e in graph.incident(wname):
            v = vid(e.other(wname))
            bit = 1 << graph.edge_index(e.eid)
            if not (m2 & bit):
                continue
            for m in (m2, m2 & ~bit):
                if h[v, m] < 0:
                    h[v, m] = d
                    queue.append((v, m))
    return h


def min_cover_walk_length(graph: RootedGraph, closed: bool = True) -> int:
    """Length of a minimal walk from the root covering every edge.

    ``closed`` requires the walk to end back at the root (the covering-tour
    length); otherwise the endpoint is free.
    """
    if graph.n_edges > MAX_ENUMERATION_EDGES:
        raise CapacityError(
            f"covering-walk search limited to {MAX_ENUMERATION_EDGES} edges"
        )
    h = _finish_distance(graph, return_to_root=closed)
    return int(h[graph.vertex_index(graph.root), 0])


def chinese_postman_tours(graph: RootedGraph) -> tuple:
    """All minimum-length closed covering walks from the root.

    Each tour is a tuple of edge ids, read as consecutive traversals
    starting and ending at the root.  Tours are directed: a tour and its
    reverse are distinct members of the result.  For a tree every tour has
    length exactly ``2|E|``; for any other connected graph the minimal
    length is at most ``2|E| - 2``.
    """
    if graph.n_edges > MAX_ENUMERATION_EDGES:
        raise CapacityError(
            f"tour enumeration limited to {MAX_ENUMERATION_EDGES} edges"
        )
    h = _finish_distance(graph, return_to_root=True)
    full = (1 << graph.n_edges) - 1
    r = graph.vertex_index(graph.root)
    total = int(h[r, 0])
    vid = graph.vertex_index
    tours = []
    # DFS restricted to optimal moves: step (v,m)->(w,m|bit) allowed iff it
    # keeps used + h equal to the optimum.
    def extend(vname, mask, walk):
        v = vid(vname)
        if mask == full and vname == graph.root:
            tours.append(tuple(walk))
            return
        for e in graph.incident(vname):
            w = e.other(vname)
            m2 = mask | (1 << graph.edge_index(e.eid))
            if len(walk) + 1 + h[vid(w), m2] == total:
                walk.append(e.eid)
                extend(w, m2, walk)
                walk.pop()

    extend(graph.root, 0, [])
    return tuple(tours)


def eulerian_cycles(graph: RootedGraph) -> tuple:
    """All Eulerian circuits from the root, as tuples of edge ids."""
    if not graph.is_eulerian():
        raise GraphError("graph is not Eulerian")
    if graph.n_edges > MAX_ENUMERATION_EDGES:
        raise CapacityError(
            f"Eulerian circuit enumeration limited to {MAX_ENUMERATION_EDGES} edges"
        )
    cycles = []
    used = set()
    walk = []

    def extend(v):
        if len(walk) == graph.n_edges:
            if v == graph.root:
                cycles.append(tuple(walk))
            return
        for e in graph.incident(v):
            if e.eid in used:
                continue
            used.add(e.eid)
            walk.append(e.eid)
            extend(e.other(v))
            walk.pop()
            used.remove(e.eid)

    extend(graph.root)
    return tuple(cycles)


def _extract_covering_walk(graph: RootedGraph, h, start: str) -> tuple:
    full = (1 << graph.n_edges) - 1
    walk = []
    v = start
    mask = 0
    while mask != full:
        hv = int(h[graph.vertex_index(v), mask])
        for e in graph.incident(v):
            m2 = mask | (1 << graph.edge_index(e.eid))
            if 1 + h[graph.vertex_index(e.other(v)), m2] == hv:
                walk.append(e.eid)
                v = e.other(v)
                mask = m2
                break
        else:  # pragma: no cover - connected graphs always progress
            raise RuntimeError("covering walk extraction failed")
    return tuple(walk)


def covering_walk_from(graph: RootedGraph, start: str) -> tuple:
    """One minimal open walk from ``start`` covering every edge.

    Used as the canonical sweep a policy falls back to once it has no
    information left to exploit; ties are broken by edge order.
    """
    if graph.n_edges > 20:
        raise CapacityError("covering walk limited to 20 edges")
    h = _finish_distance(graph, return_to_root=False)
    return _extract_covering_walk(graph, h, start)


def covering_walks_all_starts(graph: RootedGraph) -> dict:
    """Minimal covering walks from every vertex (one shared state search)."""
    if graph.n_edges > 20:
        raise CapacityError("covering walk limited to 20 edges")
    h = _finish_distance(graph, return_to_root=False)
    return {v: _extract_covering_walk(graph, h, v) for v in graph.vertices}


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def line(lam1: int, lam2: int) -> RootedGraph:
    """Line with ``lam1`` edges left of the root and ``lam2`` right of it."""
    if lam1 < 1 or lam2 < 1:
        raise GraphError("line arm lengths must be >= 1")
    vertices = [f"L{k}" for k in range(lam1, 0, -1)] + ["O"] + [
        f"R{k}" for k in range(1, lam2 + 1)
    ]
    edges = []
    left = ["O"] + [f"L{k}" for k in range(1, lam1 + 1)]
    for k in range(lam1):
        edges.append((f"L{k + 1}", left[k], left[k + 1]))
    right = ["O"] + [f"R{k}" for k in range(1, lam2 + 1)]
    for k in range(lam2):
        edges.append((f"R{k + 1}", right[k], right[k + 1]))
    g = RootedGraph(vertices, edges, "O", meta={"family": "line", "lams": (lam1, lam2)})
    return g


def circle(n: int) -> RootedGraph:
    """Cycle with ``n >= 3`` edges, rooted anywhere (all vertices alike)."""
    if n < 3:
        raise GraphError("circle needs at least 3 edges")
    vertices = ["O"] + [f"c{k}" for k in range(1, n)]
    edges = []
    for k in range(n):
        edges.append((f"a{k + 1}", vertices[k], vertices[(k + 1) % n]))
    return RootedGraph(vertices, edges, "O", meta={"family": "circle", "n": n})


def parallel(lams) -> RootedGraph:
    """Parallel graph: ``len(lams)`` vertex-disjoint paths joining O to D.

    Path ``i`` (1-based) has ``lams[i-1] >= 1`` edges named ``e{i}_{j}``
    for ``j = 1..lam_i`` reading from O to D.  With an even number of paths
    the graph is Eulerian.
    """
    lams = tuple(int(x) for x in lams)
    if len(lams) < 2:
        raise GraphError("parallel graph needs at least 2 paths")
    if any(l < 1 for l in lams):
        raise GraphError("path lengths must be >= 1")
    vertices = ["O", "D"]
    edges = []
    path_edges = []
    for i, lam in enumerate(lams, start=1):
        prev = "O"
        mine = []
        for j in range(1, lam + 1):
            nxt = "D" if j == lam else f"w{i}_{j}"
            if nxt != "D":
                vertices.append(nxt)
            eid = f"e{i}_{j}"
            edges.append((eid, prev, nxt))
            mine.append(eid)
            prev = nxt
        path_edges.append(tuple(mine))
    desc = ParallelDescriptor(
        lams=lams, origin="O", terminal="D", path_edges=tuple(path_edges)
    )
    return RootedGraph(
        vertices, edges, "O", meta={"family": "parallel", "descriptor": desc}
    )


def simple_binary_tree() -> RootedGraph:
    """The four-edge binary tree O-(e1)-v, O-(e2)-v2, v2-(e21)-z, v2-(e22)-t."""
    vertices = ["O", "v", "v2", "z", "t"]
    edges = [
        ("e1", "O", "v"),
        ("e2", "O", "v2"),
        ("e21", "v2", "z"),
        ("e22", "v2", "t"),
    ]
    return RootedGraph(vertices, edges, "O", meta={"family": "simple-binary-tree"})


def tree_from_shape(shape: str) -> RootedGraph:
    """Tree from a nested-parenthesis shape, e.g. ``(()(()()))``.

    The outer group is the root; each inner group is a child subtree.
    Edges are named hierarchically (``e1``, ``e2``, ``e21``, ...), vertices
    ``O``, ``v1``, ``v21``, ... matching the edge below which they sit.
    """
    s = shape.strip().replace(" ", "")
    if not s or s[0] != "(" or s[-1] != ")":
        raise GraphError(f"malformed shape {shape!r}")

    def parse(i):
        # parse a group starting at s[i] == '('; return (children, next index)
        if s[i] != "(":
            raise GraphError(f"malformed shape {shape!r}")
        i += 1
        kids = []
        while i < len(s) and s[i] == "(":
            sub, i = parse(i)
            kids.append(sub)
        if i >= len(s) or s[i] != ")":
            raise GraphError(f"malformed shape {shape!r}")
        return kids, i + 1

    tree, end = parse(0)
    if end != len(s):
        raise GraphError(f"malformed shape {shape!r}")

    vertices = ["O"]
    edges = []

    def emit(kids, parent, prefix):
        for idx, sub in enumerate(kids, start=1):
            label = f"{prefix}{idx}"
            v = f"v{label}"
            vertices.append(v)
            edges.append((f"e{label}", parent, v))
            emit(sub, v, label)

    emit(tree, "O", "")
    if not edges:
        raise GraphError("shape has no edges")
    return RootedGraph(vertices, edges, "O", meta={"family": "tree", "shape": s})


def counterexample_tree() -> RootedGraph:
    """Nine-edge tree where waiting can beat depth-first discipline.

    The left arm is a five-edge path from O down to v1 (first edge ``e1``,
    last edge ``e1p``); the right side is ``e2`` to v2, the leaf edge
    ``e21``, and a two-edge path ``e22``, ``e22p`` down to v22.
    """
    vertices = ["O", "a1", "a2", "a3", "a4", "v1", "v2", "v21", "u22", "v22"]
    edges = [
        ("e1", "O", "a1"),
        ("c2", "a1", "a2"),
        ("c3", "a2", "a3"),
        ("c4", "a3", "a4"),
        ("e1p", "a4", "v1"),
        ("e2", "O", "v2"),
        ("e21", "v2", "v21"),
        ("e22", "v2", "u22"),
        ("e22p", "u22", "v22"),
    ]
    return RootedGraph(vertices, edges, "O", meta={"family": "counterexample-tree"})


def random_tree(rng: np.random.Generator, n_edges: int) -> RootedGraph:
    """Uniform-attachment random tree with ``n_edges`` edges."""
    if n_edges < 1:
        raise GraphError("need at least one edge")
    vertices = ["O"]
    edges = []
    for k in range(1, n_edges + 1):
        parent = vertices[int(rng.integers(len(vertices)))]
        v = f"v{k}"
        vertices.append(v)
        edges.append((f"e{k}", parent, v))
    return RootedGraph(vertices, edges, "O")


def random_binary_tree(
    rng: np.random.Generator, n_leaves: int, max_extra_unary: int = 3
) -> RootedGraph:
    """Random tree whose vertices all have at most two children.

    Grows by splitting random leaves until ``n_leaves`` leaf edges exist,
    then stretches a few random edges into unary chains so path segments of
    length > 1 occur too.
    """
    if n_leaves < 1:
        raise GraphError("need at least one leaf")
    children = {0: []}
    nxt = [1]

    def new_child(parent):
        v = nxt[0]
        nxt[0] += 1
        children[parent] = children.get(parent, []) + [v]
        children[v] = []
        return v

    new_child(0)
    leaves = lambda: [v for v, c in children.items() if not c and v != 0]
    while len(leaves()) < n_leaves:
        # split a random leaf into two children (keeps the tree binary)
        candidates = leaves()
        v = candidates[int(rng.integers(len(candidates)))]
        new_child(v)
        new_child(v)
    for _ in range(int(rng.integers(max_extra_unary + 1))):
        # subdivide a random edge: child list length 1 stays binary
        vs = [v for v in children if v != 0]
        v = vs[int(rng.integers(len(vs)))]
        w = nxt[0]
        nxt[0] += 1
        # w takes v's children, v's single child becomes w
        children[w] = children[v]
        children[v] = [w]
    vertices = ["O"]
    edges = []

    def emit(node, name, prefix):
        for i, c in enumerate(children[node], start=1):
            label = f"{prefix}{i}"
            cname = f"v{label}"
            vertices.append(cname)
            edges.append((f"e{label}", name, cname))
            emit(c, cname, label)

    emit(0, "O", "")
    return RootedGraph(vertices, edges, "O")


def random_connected_multigraph(
    rng: np.random.Generator, n_edges: int, extra_edge_prob: float = 0.6
) -> RootedGraph:
    """Random connected multigraph: a random tree plus random extra edges."""
    if n_edges < 1:
        raise GraphError("need at least one edge")
    n_tree = max(1, int(rng.integers(1, n_edges + 1)))
    g = random_tree(rng, n_tree)
    vertices = list(g.vertices)
    edges = [(e.eid, e.u, e.v) for e in g.edges]
    k = n_tree
    while k < n_edges and rng.random() < extra_edge_prob:
        u, v = rng.choice(len(vertices), size=2, replace=False)
        k += 1
        edges.append((f"x{k}", vertices[int(u)], vertices[int(v)]))
    return RootedGraph(vertices, edges, "O")


# ---------------------------------------------------------------------------
# Instance files
# ---------------------------------------------------------------------------


def load_instance(text: str):
    """Parse a JSON instance into (graph, per-edge activation probabilities).

    Expected shape::

        {"vertices": [...], "root": "O",
         "edges": [{"id": "e1", "ends": ["O", "v1"], "p": 0.5}, ...]}

    A missing ``p`` defaults to 1.  Raises :class:`GraphError` with a
    position hint on malformed input.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphError(
            f"instance parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    for key in ("vertices", "root", "edges"):
        if key not in doc:
            raise GraphError(f"instance file missing {key!r}")
    edges = []
    probs = {}
    for rec in doc["edges"]:
        try:
            eid = str(rec["id"])
            u, v = rec["ends"]
        except (KeyError, TypeError, ValueError):
            raise GraphError(f"malformed edge record {rec!r}") from None
        p = float(rec.get("p", 1.0))
        if not (0.0 < p <= 1.0):
            raise GraphError(f"edge {eid!r}: probability {p} outside (0, 1]")
        edges.append((eid, str(u), str(v)))
        probs[eid] = p
    graph = RootedGraph([str(v) for v in doc["vertices"]], edges, str(doc["root"]))
    return graph, probs


def dump_instance(graph: RootedGraph, probs=None) -> str:
    """Serialize a graph (+ per-edge probabilities) to the JSON instance form."""
    probs = probs or {}
    doc = {
        "vertices": list(graph.vertices),
        "root": graph.root,
        "edges": [
            {"id": e.eid, "ends": [e.u, e.v], "p": float(probs.get(e.eid, 1.0))}
            for e in graph.edges
        ],
    }
    return json.dumps(doc, indent=2)
