"""Constructions of graph pairs that WL-type tests cannot tell apart but whose
pattern counts differ, and a checker for both halves of that claim."""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass

from .counting import CountMode, Pattern, as_pattern, count, path_pattern
from .errors import PatternDisconnected, PatternTooSmall
from .graph import DEFAULT_TOKEN, AttributedGraph, _pair, token_key
from .wl import DEFAULT_BUDGET, wl_refine_pair


class RegimeViolation(UserWarning):
    """Path construction requested with ``m < (k+1) * 2**T``."""


def mod_a(a: int, b: int) -> int:
    """``b mod a`` mapped into ``1..a`` (``a`` when ``a`` divides ``b``)."""
    if a < 1 or b < 1:
        raise ValueError("mod_a needs positive integers")
    r = b % a
    return a if r == 0 else r


@dataclass(frozen=True)
class ExpectedCounts:
    pattern: Pattern
    mode: CountMode
    count_g1: int
    count_g2: int
    # False means count_g2 is a lower bound
    count_g2_exact: bool = True

    def matches(self, c1: int, c2: int) -> bool:
        ok2 = c2 == self.count_g2 if self.count_g2_exact else c2 >= self.count_g2
        return c1 == self.count_g1 and ok2


@dataclass(frozen=True)
class CounterexamplePair:
    g1: AttributedGraph
    g2: AttributedGraph
    construction: str
    params: dict
    expected: ExpectedCounts
    in_regime: bool = True

    def __post_init__(self):
        if self.g1.n != self.g2.n:
            raise ValueError("counterexample graphs must have equal node counts")


def _fresh_token(tokens) -> int:
    ints = [t for t in tokens if isinstance(t, int)]
    return max(ints, default=DEFAULT_TOKEN) + 1


def _copy_twice(p: AttributedGraph, order: list[int]):
    """Two disjoint copies of ``p`` with ``order[r]`` placed at ``r`` and ``r + m``."""
    m = p.n
    pos = {v: r for r, v in enumerate(order)}
    nf = [p.node_features[v] for v in order] * 2
    ef = {}
    for (i, j), t in p.edge_features.items():
        a, b = _pair(pos[i], pos[j])
        ef[(a, b)] = t
        ef[(a + m, b + m)] = t
    return nf, ef


def doubled_pattern_pair(p: Pattern | AttributedGraph) -> CounterexamplePair:
    """Two copies of ``p`` rewired so 2-WL cannot separate them.

    Non-clique patterns: with ``(a, b)`` the smallest non-adjacent pair moved to
    positions ``(0, 1)``, ``g1`` closes ``a-b`` inside each copy while ``g2``
    joins ``a`` and ``b`` across copies; the four new edges carry one fresh
    token. Cliques: ``g1`` moves the edge ``0-1`` of each copy across copies
    (keeping its token) and ``g2`` is the plain doubled clique.
    """
    p = as_pattern(p)
    pg = p.graph
    m = pg.n
    if m < 3:
        raise PatternTooSmall("doubled-pattern construction needs at least 3 nodes")
    if not p.connected:
        raise PatternDisconnected("doubled-pattern construction needs a connected pattern")

    non_adjacent = [(a, b) for a in range(m) for b in range(a + 1, m) if not pg.has_edge(a, b)]
    expected = ExpectedCounts(p, CountMode.MATCHING, 0, 2, count_g2_exact=False)
    if non_adjacent:
        a, b = non_adjacent[0]
        order = [a, b] + [v for v in range(m) if v not in (a, b)]
        nf, ef = _copy_twice(pg, order)
        tok = _fresh_token(pg.edge_features.values())
        ef1 = dict(ef)
        ef1[(0, 1)] = tok
        ef1[(m, m + 1)] = tok
        ef2 = dict(ef)
        ef2[(0, m + 1)] = tok
        ef2[(1, m)] = tok
        case = "non-clique"
        params = {"pair": [a, b], "added_token": tok}
    else:
        order = list(range(m))
        nf, ef = _copy_twice(pg, order)
        ef2 = dict(ef)
        ef1 = dict(ef)
        t01 = ef1.pop((0, 1))
        t_copy = ef1.pop((m, m + 1))
        ef1[(0, m + 1)] = t01
        ef1[(1, m)] = t_copy
        case = "clique"
        params = {"pair": [0, 1]}
    g1 = AttributedGraph(2 * m, ef1.keys(), nf, ef1)
    g2 = AttributedGraph(2 * m, ef2.keys(), nf, ef2)
    params.update(case=case, pattern=p.name or None, m=m)
    return CounterexamplePair(g1, g2, "doubled", params, expected)


def path_counterexample_pair(k: int, T: int, m: int) -> CounterexamplePair:
    """Two ``m``-cycles (``g1``) against one ``2m``-cycle (``g2``).

    Both start from two disjoint copies of the path ``H_m`` and add two
    closing edges carrying the path's own edge token. When ``m`` is below
    ``(k+1) * 2**T`` the pair is still returned but flagged out of regime.
    """
    if m < 3:
        raise PatternTooSmall("path construction needs m >= 3")
    in_regime = m >= (k + 1) * 2**T
    if not in_regime:
        warnings.warn(
            f"m={m} < (k+1)*2^T={(k + 1) * 2**T}: outside the proven regime", RegimeViolation, stacklevel=2
        )
    base = {(i, i + 1): DEFAULT_TOKEN for i in range(m - 1)}
    base.update({(i + m, i + m + 1): DEFAULT_TOKEN for i in range(m - 1)})
    e1 = dict(base)
    e1[(0, m - 1)] = DEFAULT_TOKEN
    e1[(m, 2 * m - 1)] = DEFAULT_TOKEN
    e2 = dict(base)
    e2[(0, 2 * m - 1)] = DEFAULT_TOKEN
    e2[(m - 1, m)] = DEFAULT_TOKEN
    g1 = AttributedGraph(2 * m, e1.keys(), None, e1)
    g2 = AttributedGraph(2 * m, e2.keys(), None, e2)
    expected = ExpectedCounts(path_pattern(m), CountMode.MATCHING, 0, 2 * m)
    return CounterexamplePair(g1, g2, "path", {"k": k, "T": T, "m": m}, expected, in_regime)


def same_local_statistics(cp: CounterexamplePair) -> bool:
    """Equal degree sequences and equal node/edge token multisets."""
    g1, g2 = cp.g1, cp.g2
    return (
        sorted(g1.degrees()) == sorted(g2.degrees())
        and sorted(map(token_key, g1.node_features)) == sorted(map(token_key, g2.node_features))
        and sorted(map(token_key, g1.edge_features.values()))
        == sorted(map(token_key, g2.edge_features.values()))
    )


def theorem_applies(cp: CounterexamplePair, k: int, T: int | None) -> bool:
    """Whether the constructions' guarantee covers a run of ``k``-WL for ``T`` iterations."""
    if cp.construction == "doubled":
        return k <= 2
    if cp.construction == "path":
        return T is not None and cp.expected.pattern.n >= (k + 1) * 2**T
    return False


@dataclass
class InstanceResult:
    construction: str
    params: dict
    k: int
    iters: int | None
    count_g1: int
    count_g2: int
    counts_ok: bool
    verdict: str
    wl_iteration: int
    indistinguishable: bool
    theorem_applies: bool
    seconds: float = 0.0
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.counts_ok and self.indistinguishable

    def to_json_obj(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def verify_pair(
    cp: CounterexamplePair, k: int, T: int | None = None, budget: int | None = DEFAULT_BUDGET
) -> InstanceResult:
    """Recount both graphs and run k-WL on the pair (``T=None``: until stable)."""
    start = time.perf_counter()
    ex = cp.expected
    c1 = count(cp.g1, ex.pattern, ex.mode)
    c2 = count(cp.g2, ex.pattern, ex.mode)
    res = wl_refine_pair(cp.g1, cp.g2, k, T, budget)
    applies = theorem_applies(cp, k, T)
    ind = not res.distinguished
    note = ""
    if not ind and not applies:
        note = "distinguished outside the construction's guarantee"
    elif not ind:
        note = "distinguished although the construction guarantees otherwise"
    return InstanceResult(
        construction=cp.construction,
        params=dict(cp.params),
        k=k,
        iters=T,
        count_g1=c1,
        count_g2=c2,
        counts_ok=ex.matches(c1, c2),
        verdict=res.verdict.value,
        wl_iteration=res.iteration,
        indistinguishable=ind,
        theorem_applies=applies,
        seconds=time.perf_counter() - start,
        note=note,
    )


def standard_corpus() -> list[CounterexamplePair]:
    """Doubled pairs for every connected 3-5 node pattern plus the path pairs."""
    from .counting import enumerate_connected_patterns

    pairs = [doubled_pattern_pair(p) for s in (3, 4, 5) for p in enumerate_connected_patterns(s)]
    for k, T, m in PATH_CASES:
        pairs.append(path_counterexample_pair(k, T, m))
    return pairs


PATH_CASES = ((2, 1, 6), (2, 2, 12), (3, 1, 8))
