"""Exact matching-count and containment-count of small attributed patterns.

``matching_count`` counts induced copies (vertex subsets whose induced
subgraph is isomorphic to the pattern). ``containment_count`` counts
subgraph copies (vertex set plus edge subset) as the number of
feature-preserving monomorphisms divided by the pattern's automorphism count.
"""

from __future__ import annotations

import enum
import itertools
from collections import Counter
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import (
    CountingInternalError,
    NotAStar,
    PatternTooLarge,
    SizeLimitExceeded,
    ValidationError,
)
from .graph import (
    DEFAULT_TOKEN,
    AttributedGraph,
    _isomorphic_unbounded,
    _pair,
    automorphism_count,
    complete_graph,
    cycle_graph,
    induced_subgraph,
    path_graph,
    token_key,
)

MAX_PATTERN_NODES = 8


class CountMode(enum.Enum):
    MATCHING = "matching"
    CONTAINMENT = "containment"


@dataclass(frozen=True)
class Pattern:
    """A small graph to be counted, with cached automorphism count.

    ``kind`` marks patterns with a dedicated counting routine (``"path"``);
    such patterns may pass ``aut_count`` and exceed the generic size cap.
    """

    graph: AttributedGraph
    name: str = ""
    kind: str = "generic"
    aut_count: int | None = None
    connected: bool = field(init=False)

    def __post_init__(self):
        if self.graph.n == 0:
            raise ValidationError("pattern must have at least one node")
        if self.aut_count is None:
            if self.graph.n > MAX_PATTERN_NODES:
                raise PatternTooLarge(
                    f"pattern has {self.graph.n} nodes; at most {MAX_PATTERN_NODES} supported"
                )
            object.__setattr__(self, "aut_count", automorphism_count(self.graph))
        object.__setattr__(self, "connected", self.graph.is_connected())

    @property
    def n(self) -> int:
        return self.graph.n

    def is_clique(self) -> bool:
        return self.graph.num_edges == comb(self.graph.n, 2)


def as_pattern(p: Pattern | AttributedGraph) -> Pattern:
    return p if isinstance(p, Pattern) else Pattern(p)


# -- pattern constructors ----------------------------------------------------


def path_pattern(m: int) -> Pattern:
    """Unattributed path ``H_m`` on ``m`` nodes."""
    if m < 1:
        raise ValidationError("path pattern needs m >= 1")
    return Pattern(path_graph(m), name=f"path:{m}", kind="path", aut_count=1 if m == 1 else 2)


def star_pattern(m: int, node_features=None, edge_features=None) -> Pattern:
    """Star on ``m`` nodes: center 0 joined to leaves ``1..m-1``.

    ``edge_features[r]`` is the token of the edge between the center and leaf ``r+1``.
    """
    if m < 2:
        raise ValidationError("star pattern needs m >= 2")
    edges = [(0, i) for i in range(1, m)]
    ef = None
    if edge_features is not None:
        if len(edge_features) != m - 1:
            raise ValidationError(f"expected {m - 1} edge tokens")
        ef = dict(zip(edges, edge_features))
    return Pattern(AttributedGraph(m, edges, node_features, ef), name=f"star:{m}")


def clique_pattern(m: int) -> Pattern:
    return Pattern(complete_graph(m), name=f"clique:{m}")


def triangle_pattern() -> Pattern:
    return Pattern(complete_graph(3), name="triangle")


def builtin_pattern(spec: str) -> Pattern:
    """Resolve ``triangle``, ``3star``, ``path:m``, ``star:m``, ``clique:m`` or ``cycle:m``."""
    spec = spec.removeprefix("builtin:")
    if spec == "triangle":
        return triangle_pattern()
    if spec == "3star":
        return star_pattern(4)
    kind, _, arg = spec.partition(":")
    if not arg.isdigit():
        raise ValidationError(f"unknown builtin pattern {spec!r}")
    m = int(arg)
    if kind == "path":
        return path_pattern(m)
    if kind == "star":
        return star_pattern(m)
    if kind == "clique":
        return clique_pattern(m)
    if kind == "cycle":
        return Pattern(cycle_graph(m), name=spec)
    raise ValidationError(f"unknown builtin pattern {spec!r}")


def enumerate_connected_patterns(size: int) -> list[Pattern]:
    """One representative per isomorphism class of connected graphs on ``size`` nodes."""
    if not 3 <= size <= 5:
        raise SizeLimitExceeded("connected-pattern enumeration supports 3 <= size <= 5")
    pairs = list(itertools.combinations(range(size), 2))
    buckets: dict[tuple, list[AttributedGraph]] = {}
    out: list[Pattern] = []
    for r in range(size - 1, len(pairs) + 1):
        for chosen in itertools.combinations(pairs, r):
            g = AttributedGraph(size, chosen)
            if not g.is_connected():
                continue
            key = (r, tuple(sorted(g.degrees())))
            reps = buckets.setdefault(key, [])
            if any(_isomorphic_unbounded(g, h) for h in reps):
                continue
            reps.append(g)
            out.append(Pattern(g, name=f"conn{size}_{len(out)}"))
    return out


# -- counting ----------------------------------------------------------------


def _check_pattern(p: Pattern) -> None:
    if p.n > MAX_PATTERN_NODES:
        raise PatternTooLarge(f"pattern has {p.n} nodes")


def matching_count(g: AttributedGraph, p: Pattern | AttributedGraph) -> int:
    """Number of node subsets whose induced subgraph is isomorphic to ``p``."""
    p = as_pattern(p)
    _check_pattern(p)
    m = p.n
    if m > g.n:
        return 0
    target_edges = p.graph.num_edges
    node_need = Counter(map(token_key, p.graph.node_features))
    adj = g.adjacency
    count = 0
    for subset in itertools.combinations(range(g.n), m):
        if adj[np.ix_(subset, subset)].sum() != 2 * target_edges:
            continue
        if Counter(token_key(g.node_features[v]) for v in subset) != node_need:
            continue
        if _isomorphic_unbounded(induced_subgraph(g, subset), p.graph):
            count += 1
    return count


def _search_order(p: AttributedGraph) -> list[int]:
    """Pattern nodes ordered so each node after the first touches an earlier one when possible."""
    order: list[int] = []
    placed: set[int] = set()
    remaining = set(range(p.n))
    while remaining:
        frontier = [v for v in remaining if any(u in placed for u in p.neighbors(v))]
        pool = frontier or list(remaining)
        v = max(pool, key=lambda x: (sum(u in placed for u in p.neighbors(x)), p.degree(x), -x))
        order.append(v)
        placed.add(v)
        remaining.remove(v)
    return order


def monomorphism_count(g: AttributedGraph, p: AttributedGraph) -> int:
    """Number of injective, token-preserving maps sending pattern edges to graph edges."""
    if p.n > g.n:
        return 0
    order = _search_order(p)
    pos = {v: r for r, v in enumerate(order)}
    back_edges = [
        [(u, p.edge_features[_pair(u, v)]) for u in p.neighbors(v) if pos[u] < pos[v]]
        for v in order
    ]
    g_deg = g.degrees()
    candidates = [
        [w for w in range(g.n) if g.node_features[w] == p.node_features[v] and g_deg[w] >= p.degree(v)]
        for v in order
    ]
    adj = g.adjacency
    gef = g.edge_features
    image = [-1] * p.n
    used = [False] * g.n

    def extend(r: int) -> int:
        if r == len(order):
            return 1
        v = order[r]
        total = 0
        for w in candidates[r]:
            if used[w]:
                continue
            ok = True
            for u, tok in back_edges[r]:
                wu = image[u]
                if not adj[w, wu] or gef[_pair(w, wu)] != tok:
                    ok = False
                    break
            if not ok:
                continue
            image[v] = w
            used[w] = True
            total += extend(r + 1)
            used[w] = False
        image[v] = -1
        return total

    return extend(0)


def containment_count(g: AttributedGraph, p: Pattern | AttributedGraph) -> int:
    """Number of subgraphs (node set, edge subset) of ``g`` isomorphic to ``p``."""
    p = as_pattern(p)
    _check_pattern(p)
    if p.n > g.n:
        return 0
    mono = monomorphism_count(g, p.graph)
    q, r = divmod(mono, p.aut_count)
    if r:
        raise CountingInternalError(
            f"{mono} monomorphisms not divisible by |Aut(p)| = {p.aut_count}"
        )
    return q


def containment_count_by_subsets(g: AttributedGraph, p: Pattern | AttributedGraph) -> int:
    """Slow reference count: every node subset, every edge subset of matching size.

    Independent of the monomorphism search; meant for graphs of up to ~7 nodes.
    """
    p = as_pattern(p)
    m, e = p.n, p.graph.num_edges
    if m > g.n:
        return 0
    total = 0
    for subset in itertools.combinations(range(g.n), m):
        sub = induced_subgraph(g, subset)
        for chosen in itertools.combinations(sub.sorted_edges(), e):
            cand = AttributedGraph(
                m, chosen, sub.node_features, {pair: sub.edge_features[pair] for pair in chosen}
            )
            if _isomorphic_unbounded(cand, p.graph):
                total += 1
    return total


def induced_path_count(g: AttributedGraph, m: int) -> int:
    """Induced copies of the unattributed path on ``m`` nodes (no size cap).

    Walks every simple path with ``m`` nodes, rejects chords and non-default
    tokens, and halves the total since each path is walked from both ends.
    """
    if m < 1:
        raise ValidationError("path length must be >= 1")
    if m > g.n:
        return 0
    ok_node = [t == DEFAULT_TOKEN for t in g.node_features]
    if m == 1:
        return sum(ok_node)
    adj = g.adjacency
    gef = g.edge_features
    path: list[int] = []
    on_path = [False] * g.n
    total = 0

    def walk(v: int) -> None:
        nonlocal total
        if len(path) == m:
            total += 1
            return
        for w in g.neighbors(v):
            if on_path[w] or not ok_node[w] or gef[_pair(v, w)] != DEFAULT_TOKEN:
                continue
            # w may touch only its predecessor among the nodes already on the path
            if any(adj[w, u] for u in path[:-1]):
                continue
            path.append(w)
            on_path[w] = True
            walk(w)
            path.pop()
            on_path[w] = False

    for v in range(g.n):
        if ok_node[v]:
            path.append(v)
            on_path[v] = True
            walk(v)
            path.pop()
            on_path[v] = False
    return total // 2


def count(g: AttributedGraph, p: Pattern | AttributedGraph, mode: CountMode | str) -> int:
    p = as_pattern(p)
    mode = CountMode(mode)
    if p.kind == "path" and mode is CountMode.MATCHING:
        return induced_path_count(g, p.n)
    if mode is CountMode.MATCHING:
        return matching_count(g, p)
    return containment_count(g, p)


# -- fast paths --------------------------------------------------------------


def star_center(p: AttributedGraph) -> int:
    """Center node of a star-shaped pattern, or raise ``NotAStar``."""
    m = p.n
    if m < 2 or p.num_edges != m - 1:
        raise NotAStar("a star on m nodes has exactly m-1 edges and m >= 2")
    if m == 2:
        return 0
    centers = [v for v in range(m) if p.degree(v) == m - 1]
    if len(centers) != 1:
        raise NotAStar("pattern has no node adjacent to all others")
    return centers[0]


def star_containment_count(g: AttributedGraph, p: Pattern | AttributedGraph) -> int:
    """Containment count of a star pattern from per-node neighbor multisets.

    For each host node whose token matches the center, the number of ways to
    pick the pattern's leaf multiset of (leaf token, edge token) pairs out of
    the node's neighbor multiset is a product of binomials, one per class.
    """
    pg = p.graph if isinstance(p, Pattern) else p
    c = star_center(pg)
    center_tok = pg.node_features[c]
    need = Counter(
        (token_key(pg.node_features[v]), token_key(pg.edge_features[_pair(c, v)]))
        for v in pg.neighbors(c)
    )
    total = 0
    for j in range(g.n):
        if g.node_features[j] != center_tok:
            continue
        have = Counter(
            (token_key(g.node_features[k]), token_key(g.edge_features[_pair(j, k)]))
            for k in g.neighbors(j)
        )
        ways = 1
        for cls, needed in need.items():
            ways *= comb(have.get(cls, 0), needed)
            if not ways:
                break
        total += ways
    if pg.n == 2 and pg.node_features[0] == pg.node_features[1]:
        # single-edge pattern: both endpoints can act as center
        total //= 2
    return total


def _is_unattributed(g: AttributedGraph) -> bool:
    return all(t == DEFAULT_TOKEN for t in g.node_features) and all(
        t == DEFAULT_TOKEN for t in g.edge_features.values()
    )


def triangle_count(g: AttributedGraph) -> int:
    """Triangles of an unattributed graph via ``trace(A^3) / 6``."""
    a = g.adjacency.astype(np.int64)
    return int(np.einsum("ij,jk,ki->", a, a, a)) // 6


def fast_count(g: AttributedGraph, p: Pattern, mode: CountMode | str) -> int:
    """Dispatch to a closed-form count when one applies, else the generic oracle."""
    mode = CountMode(mode)
    if p.n == 3 and p.is_clique() and _is_unattributed(p.graph) and _is_unattributed(g):
        return triangle_count(g)
    if mode is CountMode.CONTAINMENT:
        try:
            star_center(p.graph)
        except NotAStar:
            pass
        else:
            return star_containment_count(g, p)
    return count(g, p, mode)
