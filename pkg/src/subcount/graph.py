"""Attributed graphs, exact isomorphism for small graphs, and the text/JSON formats.

Nodes are ``0 .. n-1`` inside the library. The on-disk formats are 1-based.
Feature tokens are opaque discrete values (``int`` or ``str``) compared by
exact equality; the default token is ``0``.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    EmptySelection,
    IndexOutOfRange,
    ParseError,
    SizeLimitExceeded,
    ValidationError,
)

Token = int | str

DEFAULT_TOKEN: Token = 0
BRUTE_FORCE_LIMIT = 10

_STR_TOKEN = re.compile(r"^[A-Za-z_][A-Za-z0-9_.:-]*$")


def token_key(token: Token):
    """Total order over mixed int/str tokens (ints first)."""
    return (0, token, "") if isinstance(token, int) else (1, 0, token)


def _check_token(token) -> Token:
    if isinstance(token, bool) or not isinstance(token, (int, str)):
        raise ValidationError(f"feature token must be int or str, got {token!r}")
    if isinstance(token, int) and token < 0:
        raise ValidationError(f"integer tokens must be non-negative, got {token}")
    if isinstance(token, str) and not _STR_TOKEN.match(token):
        raise ValidationError(f"string token {token!r} must start with a letter and hold no spaces")
    return token


def _pair(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


class AttributedGraph:
    """Undirected simple graph with discrete node and edge tokens.

    Instances are immutable; derived views (adjacency matrix, neighbor lists)
    are computed once on construction.
    """

    __slots__ = ("n", "edges", "node_features", "edge_features", "_nbrs", "_adj")

    def __init__(
        self,
        n: int,
        edges: Iterable[Sequence[int]] = (),
        node_features: Sequence[Token] | None = None,
        edge_features: Mapping[tuple[int, int], Token] | None = None,
    ):
        if n < 0:
            raise ValidationError("node count must be non-negative")
        seen: set[tuple[int, int]] = set()
        for e in edges:
            i, j = int(e[0]), int(e[1])
            if not (0 <= i < n and 0 <= j < n):
                raise ValidationError(f"edge ({i}, {j}) out of range for n={n}")
            if i == j:
                raise ValidationError(f"self-loop on node {i}")
            key = _pair(i, j)
            if key in seen:
                raise ValidationError(f"duplicate edge {key}")
            seen.add(key)

        if node_features is None:
            nf = (DEFAULT_TOKEN,) * n
        else:
            nf = tuple(_check_token(t) for t in node_features)
            if len(nf) != n:
                raise ValidationError(f"expected {n} node features, got {len(nf)}")

        ef: dict[tuple[int, int], Token] = {}
        for (i, j), tok in (edge_features or {}).items():
            key = _pair(i, j)
            if key not in seen:
                raise ValidationError(f"edge feature given for non-edge {key}")
            if key in ef:
                raise ValidationError(f"edge feature for {key} given twice")
            ef[key] = _check_token(tok)
        for key in seen:
            ef.setdefault(key, DEFAULT_TOKEN)

        nbrs: list[list[int]] = [[] for _ in range(n)]
        adj = np.zeros((n, n), dtype=bool)
        for i, j in seen:
            nbrs[i].append(j)
            nbrs[j].append(i)
            adj[i, j] = adj[j, i] = True
        adj.setflags(write=False)

        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", frozenset(seen))
        object.__setattr__(self, "node_features", nf)
        object.__setattr__(self, "edge_features", ef)
        object.__setattr__(self, "_nbrs", tuple(tuple(sorted(x)) for x in nbrs))
        object.__setattr__(self, "_adj", adj)

    def __setattr__(self, name, value):
        raise AttributeError("AttributedGraph is immutable")

    def __reduce__(self):
        return (AttributedGraph, (self.n, sorted(self.edges), self.node_features, dict(self.edge_features)))

    # -- views -------------------------------------------------------------

    @property
    def adjacency(self) -> np.ndarray:
        """Read-only boolean adjacency matrix."""
        return self._adj

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self._nbrs[i]

    def degree(self, i: int) -> int:
        return len(self._nbrs[i])

    def degrees(self) -> list[int]:
        return [len(x) for x in self._nbrs]

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self._adj[i, j])

    def edge_token(self, i: int, j: int) -> Token | None:
        return self.edge_features.get(_pair(i, j))

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def is_attributed(self) -> bool:
        return any(t != DEFAULT_TOKEN for t in self.node_features) or any(
            t != DEFAULT_TOKEN for t in self.edge_features.values()
        )

    def is_connected(self) -> bool:
        if self.n <= 1:
            return True
        seen = {0}
        stack = [0]
        while stack:
            for j in self._nbrs[stack.pop()]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        return len(seen) == self.n

    # -- transforms --------------------------------------------------------

    def relabel(self, perm: Sequence[int]) -> "AttributedGraph":
        """Return the graph in which node ``i`` is renamed ``perm[i]``."""
        if sorted(perm) != list(range(self.n)):
            raise ValidationError("relabeling must be a permutation of the nodes")
        nf = [DEFAULT_TOKEN] * self.n
        for i, t in enumerate(self.node_features):
            nf[perm[i]] = t
        ef = {_pair(perm[i], perm[j]): t for (i, j), t in self.edge_features.items()}
        return AttributedGraph(self.n, ef.keys(), nf, ef)

    def strip_features(self) -> "AttributedGraph":
        return AttributedGraph(self.n, self.edges)

    # -- dunder ------------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, AttributedGraph):
            return NotImplemented
        return (
            self.n == other.n
            and self.edges == other.edges
            and self.node_features == other.node_features
            and self.edge_features == other.edge_features
        )

    def __hash__(self):
        return hash((self.n, self.edges, self.node_features, frozenset(self.edge_features.items())))

    def __repr__(self):
        return f"AttributedGraph(n={self.n}, m={len(self.edges)})"


# -- small constructors ------------------------------------------------------


def empty_graph(n: int) -> AttributedGraph:
    return AttributedGraph(n)


def complete_graph(n: int) -> AttributedGraph:
    return AttributedGraph(n, itertools.combinations(range(n), 2))


def cycle_graph(n: int) -> AttributedGraph:
    if n < 3:
        raise ValidationError("a simple cycle needs at least 3 nodes")
    return AttributedGraph(n, [(i, (i + 1) % n) for i in range(n)])


def path_graph(n: int) -> AttributedGraph:
    return AttributedGraph(n, [(i, i + 1) for i in range(n - 1)])


def star_graph(leaves: int) -> AttributedGraph:
    """Center 0 joined to ``leaves`` leaf nodes."""
    return AttributedGraph(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def disjoint_union(*graphs: AttributedGraph) -> AttributedGraph:
    nf: list[Token] = []
    ef: dict[tuple[int, int], Token] = {}
    offset = 0
    for g in graphs:
        nf.extend(g.node_features)
        for (i, j), t in g.edge_features.items():
            ef[(i + offset, j + offset)] = t
        offset += g.n
    return AttributedGraph(offset, ef.keys(), nf, ef)


# -- isomorphism -------------------------------------------------------------


@dataclass(frozen=True)
class IsoMapping:
    """Bijection ``i -> permutation[i]`` between node sets of equal size."""

    permutation: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.permutation) != list(range(len(self.permutation))):
            raise ValidationError("IsoMapping must be a bijection")

    def __call__(self, i: int) -> int:
        return self.permutation[i]

    def __len__(self):
        return len(self.permutation)

    def compose(self, other: "IsoMapping") -> "IsoMapping":
        """``(self ∘ other)(i) = self(other(i))``."""
        return IsoMapping(tuple(self.permutation[j] for j in other.permutation))

    def inverse(self) -> "IsoMapping":
        inv = [0] * len(self.permutation)
        for i, j in enumerate(self.permutation):
            inv[j] = i
        return IsoMapping(tuple(inv))


def is_isomorphism(g1: AttributedGraph, g2: AttributedGraph, perm: Sequence[int]) -> bool:
    """Check that ``perm`` preserves edges, node tokens and edge tokens."""
    if g1.n != g2.n or len(perm) != g1.n or len(g1.edges) != len(g2.edges):
        return False
    for i in range(g1.n):
        if g1.node_features[i] != g2.node_features[perm[i]]:
            return False
    for (i, j), t in g1.edge_features.items():
        if g2.edge_token(perm[i], perm[j]) != t:
            return False
    return True


def _check_size(*graphs: AttributedGraph, limit: int = BRUTE_FORCE_LIMIT) -> None:
    for g in graphs:
        if g.n > limit:
            raise SizeLimitExceeded(f"graph with {g.n} nodes exceeds brute-force limit {limit}")


def _invariant(g: AttributedGraph, i: int):
    return (token_key(g.node_features[i]), g.degree(i))


def _iso_search(g1: AttributedGraph, g2: AttributedGraph) -> Iterator[tuple[int, ...]]:
    """Yield all isomorphisms g1 -> g2 in lexicographic order."""
    n = g1.n
    if n != g2.n or len(g1.edges) != len(g2.edges):
        return
    inv1 = [_invariant(g1, i) for i in range(n)]
    inv2 = [_invariant(g2, i) for i in range(n)]
    if sorted(inv1) != sorted(inv2):
        return
    if sorted(map(token_key, g1.edge_features.values())) != sorted(
        map(token_key, g2.edge_features.values())
    ):
        return
    candidates = [[j for j in range(n) if inv2[j] == inv1[i]] for i in range(n)]
    a1, a2 = g1.adjacency, g2.adjacency
    ef1, ef2 = g1.edge_features, g2.edge_features
    mapping = [-1] * n
    used = [False] * n

    def extend(v: int) -> Iterator[tuple[int, ...]]:
        if v == n:
            yield tuple(mapping)
            return
        for w in candidates[v]:
            if used[w]:
                continue
            ok = True
            for u in range(v):
                mu = mapping[u]
                if a1[v, u] != a2[w, mu]:
                    ok = False
                    break
                if a1[v, u] and ef1[_pair(u, v)] != ef2[_pair(mu, w)]:
                    ok = False
                    break
            if not ok:
                continue
            mapping[v] = w
            used[w] = True
            yield from extend(v + 1)
            used[w] = False
        mapping[v] = -1

    yield from extend(0)


def is_isomorphic(g1: AttributedGraph, g2: AttributedGraph) -> IsoMapping | None:
    """Return the lexicographically smallest isomorphism ``g1 -> g2``, or ``None``."""
    _check_size(g1, g2)
    for perm in _iso_search(g1, g2):
        return IsoMapping(perm)
    return None


def _isomorphic_unbounded(g1: AttributedGraph, g2: AttributedGraph) -> bool:
    return next(_iso_search(g1, g2), None) is not None


def automorphism_count(g: AttributedGraph) -> int:
    _check_size(g)
    return sum(1 for _ in _iso_search(g, g))


def induced_subgraph(g: AttributedGraph, nodes: Sequence[int]) -> AttributedGraph:
    """Subgraph induced by ``nodes``; node ``nodes[r]`` becomes ``r``."""
    nodes = list(nodes)
    if not nodes:
        raise EmptySelection("induced_subgraph needs at least one node")
    for v in nodes:
        if not 0 <= v < g.n:
            raise IndexOutOfRange(f"node {v} not in graph with {g.n} nodes")
    if len(set(nodes)) != len(nodes):
        raise ValidationError("node selection contains duplicates")
    pos = {v: r for r, v in enumerate(nodes)}
    ef = {}
    for (i, j), t in g.edge_features.items():
        if i in pos and j in pos:
            ef[_pair(pos[i], pos[j])] = t
    return AttributedGraph(len(nodes), ef.keys(), [g.node_features[v] for v in nodes], ef)


# -- text format -------------------------------------------------------------


def _parse_token(text: str, line: int, col: int) -> Token:
    if text.isdigit():
        return int(text)
    try:
        return _check_token(text)
    except ValidationError as exc:
        raise ParseError(str(exc), line, col) from None


def _format_token(token: Token) -> str:
    return str(token)


def serialize(g: AttributedGraph) -> str:
    """Canonical text document: header, non-default node tokens, sorted edges."""
    lines = [f"graph {g.n}"]
    for i, t in enumerate(g.node_features):
        if t != DEFAULT_TOKEN:
            lines.append(f"node {i + 1} {_format_token(t)}")
    for i, j in g.sorted_edges():
        t = g.edge_features[(i, j)]
        if t == DEFAULT_TOKEN:
            lines.append(f"edge {i + 1} {j + 1}")
        else:
            lines.append(f"edge {i + 1} {j + 1} {_format_token(t)}")
    return "\n".join(lines) + "\n"


def serialize_many(graphs: Iterable[AttributedGraph]) -> str:
    return "".join(serialize(g) for g in graphs)


class _Builder:
    def __init__(self, n: int, line: int):
        self.n = n
        self.line = line
        self.nodes: dict[int, Token] = {}
        self.edges: dict[tuple[int, int], Token] = {}

    def build(self) -> AttributedGraph:
        nf = [self.nodes.get(i, DEFAULT_TOKEN) for i in range(self.n)]
        return AttributedGraph(self.n, self.edges.keys(), nf, self.edges)


def parse_many(text: str) -> list[AttributedGraph]:
    """Parse a document holding one or more ``graph`` blocks."""
    graphs: list[AttributedGraph] = []
    cur: _Builder | None = None

    def index(tok: str, lineno: int, col: int) -> int:
        if not tok.isdigit():
            raise ParseError(f"expected node index, got {tok!r}", lineno, col)
        v = int(tok)
        if not 1 <= v <= cur.n:
            raise ValidationError(f"node index {v} out of range 1..{cur.n} (line {lineno})")
        return v - 1

    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        fields = body.split()
        if not fields:
            continue
        cols = [m.start() + 1 for m in re.finditer(r"\S+", body)]
        kind = fields[0]
        if kind == "graph":
            if len(fields) != 2 or not fields[1].isdigit():
                raise ParseError("expected 'graph <n>'", lineno, cols[0])
            if cur is not None:
                graphs.append(cur.build())
            cur = _Builder(int(fields[1]), lineno)
        elif cur is None:
            raise ParseError(f"{kind!r} before 'graph' header", lineno, cols[0])
        elif kind == "node":
            if len(fields) != 3:
                raise ParseError("expected 'node <i> <token>'", lineno, cols[0])
            i = index(fields[1], lineno, cols[1])
            if i in cur.nodes:
                raise ValidationError(f"node {i + 1} given twice (line {lineno})")
            cur.nodes[i] = _parse_token(fields[2], lineno, cols[2])
        elif kind == "edge":
            if len(fields) not in (3, 4):
                raise ParseError("expected 'edge <i> <j> [token]'", lineno, cols[0])
            i = index(fields[1], lineno, cols[1])
            j = index(fields[2], lineno, cols[2])
            if i == j:
                raise ValidationError(f"self-loop on node {i + 1} (line {lineno})")
            key = _pair(i, j)
            if key in cur.edges:
                raise ValidationError(f"edge {i + 1} {j + 1} listed twice (line {lineno})")
            tok = _parse_token(fields[3], lineno, cols[3]) if len(fields) == 4 else DEFAULT_TOKEN
            cur.edges[key] = tok
        else:
            raise ParseError(f"unknown record {kind!r}", lineno, cols[0])
    if cur is not None:
        graphs.append(cur.build())
    return graphs


def parse(text: str) -> AttributedGraph:
    graphs = parse_many(text)
    if len(graphs) != 1:
        raise ParseError(f"expected exactly one graph, found {len(graphs)}")
    return graphs[0]


# -- JSON mirror -------------------------------------------------------------


def to_json_obj(g: AttributedGraph) -> dict:
    return {
        "n": g.n,
        "nodes": list(g.node_features),
        "edges": [[i + 1, j + 1, g.edge_features[(i, j)]] for i, j in g.sorted_edges()],
    }


def from_json_obj(obj: Mapping) -> AttributedGraph:
    try:
        n = int(obj["n"])
        nodes = obj.get("nodes")
        ef = {}
        for rec in obj.get("edges", []):
            i, j = int(rec[0]) - 1, int(rec[1]) - 1
            tok = rec[2] if len(rec) > 2 else DEFAULT_TOKEN
            key = _pair(i, j)
            if key in ef:
                raise ValidationError(f"edge {i + 1} {j + 1} listed twice")
            ef[key] = tok
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise ParseError(f"malformed graph object: {exc}") from None
    return AttributedGraph(n, ef.keys(), nodes, ef)


def to_json(g: AttributedGraph) -> str:
    return json.dumps(to_json_obj(g), separators=(",", ":"))


def from_json(text: str) -> AttributedGraph:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    return from_json_obj(obj)
