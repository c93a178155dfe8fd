import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subcount.errors import ParseError, SizeLimitExceeded, ValidationError
from subcount.graph import (
    AttributedGraph,
    IsoMapping,
    automorphism_count,
    complete_graph,
    cycle_graph,
    disjoint_union,
    from_json,
    induced_subgraph,
    is_isomorphic,
    is_isomorphism,
    parse,
    parse_many,
    path_graph,
    serialize,
    serialize_many,
    star_graph,
    to_json,
)

from conftest import graphs


def naive_aut_count(g):
    return sum(is_isomorphism(g, g, p) for p in itertools.permutations(range(g.n)))


# -- construction ------------------------------------------------------------


def test_rejects_self_loop():
    with pytest.raises(ValidationError):
        AttributedGraph(3, [(1, 1)])


def test_rejects_duplicate_edge_in_either_orientation():
    with pytest.raises(ValidationError):
        AttributedGraph(3, [(0, 1), (1, 0)])


def test_rejects_out_of_range_and_stray_edge_feature():
    with pytest.raises(ValidationError):
        AttributedGraph(2, [(0, 2)])
    with pytest.raises(ValidationError):
        AttributedGraph(3, [(0, 1)], edge_features={(1, 2): 1})


def test_edge_features_are_symmetric():
    g = AttributedGraph(3, [(2, 0)], edge_features={(0, 2): "x"})
    assert g.edge_token(0, 2) == g.edge_token(2, 0) == "x"
    assert g.edge_token(0, 1) is None


def test_graph_is_immutable():
    g = complete_graph(3)
    with pytest.raises(AttributeError):
        g.n = 4
    with pytest.raises(ValueError):
        g.adjacency[0, 1] = False


def test_pickle_round_trip():
    import pickle

    g = AttributedGraph(3, [(0, 1)], ["a", "b", "c"], {(0, 1): 7})
    assert pickle.loads(pickle.dumps(g)) == g


# -- isomorphism -------------------------------------------------------------


def test_k3_relabeled_is_isomorphic():
    g = complete_graph(3)
    m = is_isomorphic(g, g.relabel([1, 2, 0]))
    assert isinstance(m, IsoMapping)


def test_triangle_vs_path_not_isomorphic():
    assert is_isomorphic(complete_graph(3), path_graph(3)) is None


def test_two_triangles_vs_hexagon_not_isomorphic():
    assert is_isomorphic(disjoint_union(complete_graph(3), complete_graph(3)), cycle_graph(6)) is None


def test_isomorphism_respects_tokens():
    a = AttributedGraph(2, [(0, 1)], [1, 2])
    b = AttributedGraph(2, [(0, 1)], [2, 1])
    c = AttributedGraph(2, [(0, 1)], [1, 1])
    assert is_isomorphic(a, b).permutation == (1, 0)
    assert is_isomorphic(a, c) is None
    assert is_isomorphic(AttributedGraph(2, [(0, 1)], edge_features={(0, 1): 1}), AttributedGraph(2, [(0, 1)])) is None


def test_witness_is_lexicographically_smallest():
    g = cycle_graph(4)
    assert is_isomorphic(g, g).permutation == (0, 1, 2, 3)


def test_isomorphism_size_limit():
    g = cycle_graph(11)
    with pytest.raises(SizeLimitExceeded):
        is_isomorphic(g, g)


@settings(max_examples=60, deadline=None)
@given(graphs(max_n=6, node_tokens=2, edge_tokens=2), st.data())
def test_relabel_is_isomorphic_and_symmetric(g, data):
    perm = data.draw(st.permutations(list(range(g.n))))
    h = g.relabel(perm)
    m = is_isomorphic(g, h)
    assert m is not None and is_isomorphism(g, h, m.permutation)
    back = is_isomorphic(h, g)
    assert back is not None and is_isomorphism(h, g, back.permutation)
    assert is_isomorphism(h, g, m.inverse().permutation)


@settings(max_examples=40, deadline=None)
@given(graphs(max_n=6, node_tokens=2, edge_tokens=2))
def test_aut_count_matches_naive_filter(g):
    a = automorphism_count(g)
    assert a == naive_aut_count(g)
    assert math.factorial(g.n) % a == 0


@pytest.mark.parametrize(
    "g, expected",
    [(complete_graph(3), 6), (path_graph(3), 2), (star_graph(3), 6), (cycle_graph(6), 12), (AttributedGraph(0), 1)],
)
def test_aut_examples(g, expected):
    assert automorphism_count(g) == expected


# -- induced subgraphs -------------------------------------------------------


def test_induced_subgraph_examples():
    c6 = cycle_graph(6)
    assert is_isomorphic(induced_subgraph(c6, [0, 1, 2]), path_graph(3))
    assert induced_subgraph(c6, [0, 2, 4]).num_edges == 0
    for nodes in itertools.combinations(range(4), 3):
        assert induced_subgraph(complete_graph(4), nodes) == complete_graph(3)


def test_induced_subgraph_keeps_order_and_tokens():
    g = AttributedGraph(3, [(0, 2)], ["a", "b", "c"], {(0, 2): 5})
    h = induced_subgraph(g, [2, 0])
    assert h.node_features == ("c", "a") and h.edge_token(0, 1) == 5


# -- text and JSON formats ---------------------------------------------------


def test_serialize_k3_round_trip():
    text = serialize(complete_graph(3))
    assert text.splitlines()[0] == "graph 3"
    assert parse(text) == complete_graph(3)


@settings(max_examples=60, deadline=None)
@given(graphs(max_n=7, node_tokens=3, edge_tokens=3))
def test_text_and_json_round_trip(g):
    assert parse(serialize(g)) == g
    assert from_json(to_json(g)) == g


def test_string_tokens_round_trip():
    g = AttributedGraph(2, [(0, 1)], ["C", "O"], {(0, 1): "double"})
    assert parse(serialize(g)) == g


def test_parse_many_and_comments():
    text = "# two graphs\n" + serialize_many([complete_graph(3), path_graph(2)])
    assert parse_many(text) == [complete_graph(3), path_graph(2)]


def test_parse_is_one_based():
    g = parse("graph 3\nedge 1 3\n")
    assert g.has_edge(0, 2)


def test_parse_rejects_self_loop_and_multi_edge():
    with pytest.raises(ValidationError):
        parse("graph 2\nedge 1 1\n")
    with pytest.raises(ValidationError):
        parse("graph 2\nedge 1 2\nedge 2 1\n")


def test_parse_error_reports_position():
    with pytest.raises(ParseError) as info:
        parse("graph 3\nedge 1 x\n")
    assert info.value.line == 2 and info.value.column > 0
    with pytest.raises(ValidationError):
        parse("graph 3\nedge 1 4\n")


def test_adjacency_matches_edges():
    g = cycle_graph(5)
    A = g.adjacency
    assert A.sum() == 10 and np.array_equal(A, A.T)
