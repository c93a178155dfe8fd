"""Local relational pooling over depth-1 egonets with size-k crops.

Every node's egonet is turned into a ``k x k x d`` tensor for each
root-first ordering of its neighbors; a learned non-invariant function is
summed over those orderings, which makes the per-node output invariant.
For depth 1 the orderings compatible with breadth-first search are exactly
"root first, neighbors in any order". A crop only sees the first ``k-1``
neighbors, so the sum over all ``D!`` orderings collapses to a sum over
ordered ``(k-1)``-tuples of distinct neighbors, each weighted by
``(D-k+1)!``.

Model (bias terms included)::

    y = W1 . sum_i relu( mlp(deg_i) / |S_i| * sum_pi tanh(<W2, crop_pi>) ) + b1
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from ..errors import DepthUnsupported, DimensionMismatch, IndexOutOfRange
from ..graph import AttributedGraph, induced_subgraph

PARAM_NAMES = ("W2", "a1", "c1", "A2", "c2", "W1", "b1")


# -- egonets -----------------------------------------------------------------


@dataclass(frozen=True)
class Egonet:
    root: int
    depth: int
    graph: AttributedGraph
    # original node ids, root first, then breadth-first discovery order
    nodes: tuple[int, ...]

    @property
    def size(self) -> int:
        return self.graph.n


def extract_egonet(g: AttributedGraph, i: int, depth: int) -> Egonet:
    """Induced subgraph on all nodes within ``depth`` hops of ``i``, root relabeled 0."""
    if not 0 <= i < g.n:
        raise IndexOutOfRange(f"node {i} not in graph with {g.n} nodes")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    dist = {i: 0}
    order = [i]
    queue = deque([i])
    while queue:
        v = queue.popleft()
        if dist[v] == depth:
            continue
        for w in g.neighbors(v):
            if w not in dist:
                dist[w] = dist[v] + 1
                order.append(w)
                queue.append(w)
    return Egonet(i, depth, induced_subgraph(g, order), tuple(order))


def channel_count(attributed: bool) -> int:
    return 4 if attributed else 2


def _numeric_token(t, what: str) -> float:
    if not isinstance(t, int):
        raise DimensionMismatch(f"attributed LRP needs integer {what} tokens, got {t!r}")
    return float(t)


def _crop_tensors(ego: AttributedGraph, orders: np.ndarray, attributed: bool) -> np.ndarray:
    """Crops for each row of ``orders`` (egonet-local ids, ``-1`` = padding)."""
    n = ego.n
    c, k = orders.shape
    idx = np.where(orders < 0, n, orders)
    adj = np.zeros((n + 1, n + 1))
    adj[:n, :n] = ego.adjacency
    present = (orders >= 0).astype(float)
    out = np.zeros((c, k, k, channel_count(attributed)))
    out[..., 0] = adj[idx[:, :, None], idx[:, None, :]]
    diag = np.arange(k)
    out[:, diag, diag, 1] = present
    if attributed:
        node_tok = np.zeros(n + 1)
        node_tok[:n] = [_numeric_token(t, "node") for t in ego.node_features]
        edge_tok = np.zeros((n + 1, n + 1))
        for (a, b), t in ego.edge_features.items():
            edge_tok[a, b] = edge_tok[b, a] = _numeric_token(t, "edge")
        out[:, diag, diag, 2] = node_tok[idx]
        out[..., 3] = edge_tok[idx[:, :, None], idx[:, None, :]]
    return out


_ORDER_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _neighbor_orders(D: int, k: int) -> np.ndarray:
    """Root-first orderings seen by a size-k crop, padded with -1."""
    key = (D, k)
    if key not in _ORDER_CACHE:
        r = min(D, k - 1)
        rows = [(0,) + p + (-1,) * (k - 1 - r) for p in itertools.permutations(range(1, D + 1), r)]
        _ORDER_CACHE[key] = np.array(rows, dtype=np.int64).reshape(-1, k)
    return _ORDER_CACHE[key]


@dataclass
class CropSum:
    """Weighted crops whose weighted sum equals the sum over all root-fixing orderings."""

    crops: np.ndarray
    weights: np.ndarray
    perm_count: int

    def apply(self, f) -> np.ndarray:
        """``sum_pi f(crop_pi)`` for a function of one crop tensor."""
        return sum(int(w) * np.asarray(f(c)) for c, w in zip(self.crops, self.weights))


def lrp_feature_sum(e: Egonet, k: int = 4, attributed: bool = False) -> CropSum:
    if e.depth != 1:
        raise DepthUnsupported("only depth-1 egonets are supported")
    D = e.size - 1
    orders = _neighbor_orders(D, k)
    w = math.factorial(D - (k - 1)) if D >= k - 1 else 1
    return CropSum(
        _crop_tensors(e.graph, orders, attributed),
        np.full(len(orders), w, dtype=object),
        math.factorial(D),
    )


# -- dataset featurization ---------------------------------------------------


@dataclass
class LrpFeatures:
    """Deduplicated crops of a list of graphs.

    ``crops[u]`` is a flattened distinct crop; ``node_weights[i, u]`` is the
    weight of crop ``u`` at node ``i`` already divided by ``|S_i|``.
    Nodes of graph ``g`` occupy rows ``graph_ptr[g]:graph_ptr[g+1]``.
    """

    crops: np.ndarray
    node_weights: sparse.csr_matrix
    degrees: np.ndarray
    graph_ptr: np.ndarray
    k: int
    attributed: bool

    @property
    def num_graphs(self) -> int:
        return len(self.graph_ptr) - 1

    def pooling(self) -> sparse.csr_matrix:
        """Graph-by-node 0/1 matrix summing node rows into graph rows."""
        G = self.num_graphs
        counts = np.diff(self.graph_ptr)
        rows = np.repeat(np.arange(G), counts)
        N = int(self.graph_ptr[-1])
        return sparse.csr_matrix((np.ones(N), (rows, np.arange(N))), shape=(G, N))

    def subset(self, graph_idx) -> "LrpFeatures":
        graph_idx = np.asarray(graph_idx, dtype=np.int64)
        starts, ends = self.graph_ptr[graph_idx], self.graph_ptr[graph_idx + 1]
        rows = np.concatenate([np.arange(s, e) for s, e in zip(starts, ends)]) if len(graph_idx) else np.zeros(0, np.int64)
        ptr = np.concatenate([[0], np.cumsum(ends - starts)])
        return LrpFeatures(self.crops, self.node_weights[rows], self.degrees[rows], ptr, self.k, self.attributed)


def featurize(graphs, k: int = 4, depth: int = 1, attributed: bool = False) -> LrpFeatures:
    if depth != 1:
        raise DepthUnsupported("only depth-1 egonets are supported")
    table: dict[bytes, int] = {}
    crop_rows: list[np.ndarray] = []
    rows, cols, vals = [], [], []
    degrees = []
    ptr = [0]
    node = 0
    for g in graphs:
        for i in range(g.n):
            ego = extract_egonet(g, i, 1)
            D = ego.size - 1
            flat = _crop_tensors(ego.graph, _neighbor_orders(D, k), attributed).reshape(-1, k * k * channel_count(attributed))
            uniq, counts = np.unique(flat, axis=0, return_counts=True)
            # weight per ordered tuple divided by D! equals 1 / (number of tuples)
            scale = 1.0 / len(flat)
            for row, cnt in zip(uniq, counts):
                key = row.tobytes()
                u = table.get(key)
                if u is None:
                    u = table[key] = len(crop_rows)
                    crop_rows.append(row)
                rows.append(node)
                cols.append(u)
                vals.append(cnt * scale)
            degrees.append(D)
            node += 1
        ptr.append(node)
    F = k * k * channel_count(attributed)
    crops = np.array(crop_rows).reshape(-1, F)
    W = sparse.csr_matrix((vals, (rows, cols)), shape=(node, len(crop_rows)))
    return LrpFeatures(crops, W, np.array(degrees, dtype=float), np.array(ptr, dtype=np.int64), k, attributed)


# -- model -------------------------------------------------------------------


@dataclass
class LrpModel:
    hidden: int
    k: int = 4
    depth: int = 1
    attributed: bool = False
    params: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def channels(self) -> int:
        return channel_count(self.attributed)

    @classmethod
    def init(cls, rng: np.random.Generator, hidden: int = 16, k: int = 4, attributed: bool = False) -> "LrpModel":
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization."""
        if hidden < 1:
            raise DimensionMismatch("hidden width must be >= 1")
        F = k * k * channel_count(attributed)
        H = hidden

        def u(fan_in, *shape):
            b = 1.0 / math.sqrt(fan_in)
            return rng.uniform(-b, b, size=shape)

        params = {
            "W2": u(F, H, k, k, channel_count(attributed)),
            "a1": u(1, H),
            "c1": u(1, H),
            "A2": u(H, H, H),
            "c2": u(H, H),
            "W1": u(H, H),
            "b1": u(H, 1).reshape(()),
        }
        return cls(hidden, k, 1, attributed, params)

    @classmethod
    def zeros(cls, hidden: int, k: int = 4, attributed: bool = False) -> "LrpModel":
        m = cls.init(np.random.default_rng(0), hidden, k, attributed)
        m.params = {name: np.zeros_like(v) for name, v in m.params.items()}
        return m

    def copy(self) -> "LrpModel":
        return LrpModel(self.hidden, self.k, self.depth, self.attributed, {n: v.copy() for n, v in self.params.items()})

    def validate(self) -> None:
        H, k, d = self.hidden, self.k, self.channels
        shapes = {"W2": (H, k, k, d), "a1": (H,), "c1": (H,), "A2": (H, H), "c2": (H,), "W1": (H,), "b1": ()}
        for name, shape in shapes.items():
            got = np.shape(self.params.get(name))
            if got != shape:
                raise DimensionMismatch(f"{name} has shape {got}, expected {shape}")
            if not np.all(np.isfinite(self.params[name])):
                raise DimensionMismatch(f"{name} holds non-finite values")

    def to_json_obj(self) -> dict:
        return {
            "model": "lrp",
            "hidden": self.hidden,
            "k": self.k,
            "depth": self.depth,
            "attributed": self.attributed,
            "params": {n: np.asarray(v).tolist() for n, v in self.params.items()},
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "LrpModel":
        m = cls(obj["hidden"], obj["k"], obj["depth"], obj["attributed"],
                {n: np.array(v, dtype=float) for n, v in obj["params"].items()})
        m.validate()
        return m


def _forward(params: dict, feats: LrpFeatures):
    H = params["W1"].shape[0]
    if feats.crops.shape[1] != params["W2"][0].size:
        raise DimensionMismatch("crop width does not match W2")
    W2 = params["W2"].reshape(H, -1)
    Z = np.tanh(feats.crops @ W2.T)
    M = feats.node_weights @ Z
    pre_q = feats.degrees[:, None] * params["a1"] + params["c1"]
    q = np.maximum(pre_q, 0.0)
    gate = q @ params["A2"].T + params["c2"]
    a = gate * M
    h = np.maximum(a, 0.0)
    Q = feats.pooling()
    s = Q @ h
    y = s @ params["W1"] + params["b1"]
    cache = (Z, M, pre_q, q, gate, a, s, Q)
    return y, cache


def _backward(params: dict, feats: LrpFeatures, cache, dy: np.ndarray) -> dict:
    Z, M, pre_q, q, gate, a, s, Q = cache
    grads = {}
    grads["W1"] = s.T @ dy
    grads["b1"] = np.asarray(dy.sum())
    dh = Q.T @ (dy[:, None] * params["W1"])
    da = dh * (a > 0)
    dgate = da * M
    dM = da * gate
    dZ = feats.node_weights.T @ dM
    dpre = dZ * (1.0 - Z**2)
    grads["W2"] = (dpre.T @ feats.crops).reshape(params["W2"].shape)
    grads["A2"] = dgate.T @ q
    grads["c2"] = dgate.sum(axis=0)
    dpq = (dgate @ params["A2"]) * (pre_q > 0)
    grads["a1"] = (dpq * feats.degrees[:, None]).sum(axis=0)
    grads["c1"] = dpq.sum(axis=0)
    return grads


def predict(model: LrpModel, feats: LrpFeatures) -> np.ndarray:
    return _forward(model.params, feats)[0]


def mse_and_grad(model: LrpModel, feats: LrpFeatures, targets: np.ndarray):
    """Mean squared error over the graphs of ``feats`` and its parameter gradients."""
    y, cache = _forward(model.params, feats)
    r = y - targets
    dy = 2.0 * r / len(r)
    return float(np.mean(r**2)), _backward(model.params, feats, cache, dy)


def lrp_forward(g: AttributedGraph, model: LrpModel) -> float:
    model.validate()
    return float(predict(model, featurize([g], model.k, model.depth, model.attributed))[0])


def lrp_gradient(model: LrpModel, batch) -> dict[str, np.ndarray]:
    """Gradients of the batch mean squared error for ``[(graph, target), ...]``."""
    if not batch:
        raise ValueError("batch must be non-empty")
    model.validate()
    graphs, targets = zip(*batch)
    feats = featurize(graphs, model.k, model.depth, model.attributed)
    return mse_and_grad(model, feats, np.asarray(targets, dtype=float))[1]
