"""Reference message-passing network with sum aggregation and sum readout."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch
from ..graph import AttributedGraph


def _relu(x):
    return np.maximum(x, 0.0)


@dataclass
class MpnnLayer:
    # message: relu(W2 relu(W1 [h_i; h_j; e_ij] + b1) + b2)
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    # update: relu(V2 relu(V1 [h_i; m_i] + c1) + c2)
    V1: np.ndarray
    c1: np.ndarray
    V2: np.ndarray
    c2: np.ndarray

    @property
    def in_dim(self) -> int:
        return self.V1.shape[1] - self.W2.shape[0]

    @property
    def out_dim(self) -> int:
        return self.V2.shape[0]


@dataclass
class MpnnParams:
    node_vocab: int
    edge_vocab: int
    layers: list[MpnnLayer]

    @classmethod
    def random(
        cls,
        rng: np.random.Generator,
        node_vocab: int = 2,
        edge_vocab: int = 2,
        hidden: int = 8,
        n_layers: int = 3,
    ) -> "MpnnParams":
        layers = []
        d = node_vocab
        for _ in range(n_layers):
            u = lambda *shape: rng.uniform(-1.0, 1.0, size=shape)  # noqa: E731
            layers.append(
                MpnnLayer(
                    W1=u(hidden, 2 * d + edge_vocab), b1=u(hidden), W2=u(hidden, hidden), b2=u(hidden),
                    V1=u(hidden, d + hidden), c1=u(hidden), V2=u(hidden, hidden), c2=u(hidden),
                )
            )
            d = hidden
        return cls(node_vocab, edge_vocab, layers)

    def validate(self) -> None:
        d = self.node_vocab
        for t, L in enumerate(self.layers):
            msg = L.W2.shape[0]
            if (
                L.W1.shape[1] != 2 * d + self.edge_vocab
                or L.W2.shape[1] != L.W1.shape[0]
                or L.V1.shape[1] != d + msg
                or L.V2.shape[1] != L.V1.shape[0]
            ):
                raise DimensionMismatch(f"layer {t} shapes do not chain from input width {d}")
            d = L.out_dim


def _one_hot(tokens, vocab: int, what: str) -> np.ndarray:
    out = np.zeros((len(tokens), vocab))
    for r, t in enumerate(tokens):
        if not isinstance(t, int) or not 0 <= t < vocab:
            raise DimensionMismatch(f"{what} token {t!r} outside vocabulary of size {vocab}")
        out[r, t] = 1.0
    return out


def mpnn_forward(g: AttributedGraph, params: MpnnParams) -> np.ndarray:
    """Graph-level output ``sum_i h_i^(T)``."""
    params.validate()
    h = _one_hot(g.node_features, params.node_vocab, "node")
    edges = g.sorted_edges()
    src = np.array([i for i, j in edges] + [j for i, j in edges], dtype=np.int64)
    dst = np.array([j for i, j in edges] + [i for i, j in edges], dtype=np.int64)
    e = _one_hot([g.edge_features[p] for p in edges] * 2, params.edge_vocab, "edge")
    for L in params.layers:
        m = np.zeros((g.n, L.W2.shape[0]))
        if len(src):
            x = np.concatenate([h[src], h[dst], e], axis=1)
            msg = _relu(_relu(x @ L.W1.T + L.b1) @ L.W2.T + L.b2)
            np.add.at(m, src, msg)
        h = _relu(_relu(np.concatenate([h, m], axis=1) @ L.V1.T + L.c1) @ L.V2.T + L.c2)
    return h.sum(axis=0)
