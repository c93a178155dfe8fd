import numpy as np
import pytest
from hypothesis import strategies as st

from subcount.graph import AttributedGraph


def random_graph(rng: np.random.Generator, n: int, p: float, node_tokens: int = 1, edge_tokens: int = 1) -> AttributedGraph:
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
    nf = rng.integers(node_tokens, size=n).tolist()
    ef = {e: int(rng.integers(edge_tokens)) for e in edges}
    return AttributedGraph(n, edges, nf, ef)


@st.composite
def graphs(draw, min_n=0, max_n=7, node_tokens=1, edge_tokens=1):
    n = draw(st.integers(min_n, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    keep = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    edges = [e for e, k in zip(pairs, keep) if k]
    nf = draw(st.lists(st.integers(0, node_tokens - 1), min_size=n, max_size=n))
    ef = {e: draw(st.integers(0, edge_tokens - 1)) for e in edges}
    return AttributedGraph(n, edges, nf, ef)


@st.composite
def permutations_of(draw, n):
    return draw(st.permutations(list(range(n))))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
