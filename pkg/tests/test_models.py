import itertools
import math

import numpy as np
import pytest

from subcount.counterexamples import doubled_pattern_pair
from subcount.counting import Pattern
from subcount.errors import DepthUnsupported, DimensionMismatch, EmptySplit
from subcount.graph import AttributedGraph, complete_graph, cycle_graph, path_graph, star_graph
from subcount.models import (
    LrpModel,
    MpnnParams,
    TrainConfig,
    extract_egonet,
    featurize,
    lrp_feature_sum,
    lrp_forward,
    lrp_gradient,
    mpnn_forward,
    train_lrp,
)
from subcount.models.lrp import PARAM_NAMES, _crop_tensors, mse_and_grad, predict

from conftest import random_graph


# -- MPNN --------------------------------------------------------------------


def test_mpnn_permutation_invariant(rng):
    params = MpnnParams.random(rng, node_vocab=2, edge_vocab=2)
    for _ in range(10):
        g = random_graph(rng, 8, 0.4, 2, 2)
        perm = rng.permutation(g.n).tolist()
        np.testing.assert_allclose(mpnn_forward(g, params), mpnn_forward(g.relabel(perm), params), rtol=1e-12)


def test_mpnn_single_node_is_update_of_empty_message(rng):
    params = MpnnParams.random(rng, node_vocab=2, edge_vocab=1, n_layers=1)
    L = params.layers[0]
    h0 = np.array([0.0, 1.0])
    x = np.concatenate([h0, np.zeros(L.W2.shape[0])])
    expected = np.maximum(np.maximum(x @ L.V1.T + L.c1, 0) @ L.V2.T + L.c2, 0)
    np.testing.assert_array_equal(mpnn_forward(AttributedGraph(1, [], [1]), params), expected)


def test_mpnn_cannot_separate_doubled_path(rng):
    cp = doubled_pattern_pair(Pattern(path_graph(3)))
    for _ in range(100):
        params = MpnnParams.random(rng, node_vocab=1, edge_vocab=2)
        y1, y2 = mpnn_forward(cp.g1, params), mpnn_forward(cp.g2, params)
        assert np.max(np.abs(y1 - y2)) <= 1e-9 * max(1.0, np.max(np.abs(y1)))


def test_mpnn_vocab_errors(rng):
    params = MpnnParams.random(rng, node_vocab=1, edge_vocab=1)
    with pytest.raises(DimensionMismatch):
        mpnn_forward(AttributedGraph(2, [(0, 1)], [0, 3]), params)
    with pytest.raises(DimensionMismatch):
        mpnn_forward(AttributedGraph(2, [(0, 1)], edge_features={(0, 1): "x"}), params)


# -- egonets and crops -------------------------------------------------------


def test_egonet_examples():
    e = extract_egonet(cycle_graph(6), 0, 1)
    assert e.size == 3 and e.graph.degree(0) == 2 and e.graph.num_edges == 2
    assert e.nodes == (0, 1, 5)
    assert extract_egonet(complete_graph(4), 2, 1).graph == complete_graph(4)
    assert extract_egonet(cycle_graph(6), 3, 0).size == 1
    assert extract_egonet(cycle_graph(8), 0, 2).size == 5


def test_crop_sum_degree_three():
    cs = lrp_feature_sum(extract_egonet(star_graph(3), 0, 1))
    assert len(cs.crops) == 6 and all(w == 1 for w in cs.weights) and cs.perm_count == 6


def test_crop_sum_pads_small_egonets():
    cs = lrp_feature_sum(extract_egonet(path_graph(3), 1, 1))
    assert len(cs.crops) == 2
    for c in cs.crops:
        assert not c[3, :, :].any() and not c[:, 3, :].any()


def test_triangle_closing_entry():
    for c in lrp_feature_sum(extract_egonet(complete_graph(3), 0, 1)).crops:
        assert c[1, 2, 0] == 1
    for c in lrp_feature_sum(extract_egonet(star_graph(3), 0, 1)).crops:
        assert c[1, 2, 0] == 0


@pytest.mark.parametrize("D", range(0, 7))
def test_crop_sum_equals_full_permutation_sum(D, rng):
    g = random_graph(rng, D + 1, 0.5)
    edges = set(g.edges) | {(0, j) for j in range(1, D + 1)}
    g = AttributedGraph(D + 1, edges)
    e = extract_egonet(g, 0, 1)
    k = 4
    W = rng.normal(size=(k, k, 2))
    f = lambda c: np.tanh(np.sum(W * c))  # noqa: E731
    brute = 0.0
    for perm in itertools.permutations(range(1, D + 1)):
        order = np.array([[0, *perm[: k - 1]] + [-1] * (k - 1 - min(D, k - 1))])
        brute += f(_crop_tensors(e.graph, order, False)[0])
    cs = lrp_feature_sum(e, k)
    assert cs.perm_count == math.factorial(D)
    assert cs.apply(f) == pytest.approx(brute, rel=1e-12, abs=1e-12)


def test_depth_other_than_one_is_rejected():
    with pytest.raises(DepthUnsupported):
        lrp_feature_sum(extract_egonet(cycle_graph(5), 0, 2))
    with pytest.raises(DepthUnsupported):
        featurize([cycle_graph(5)], depth=2)


# -- LRP forward and gradients ------------------------------------------------


def test_lrp_relabeling_invariance(rng):
    model = LrpModel.init(rng, 8)
    for _ in range(10):
        g = random_graph(rng, 10, 0.3)
        perm = rng.permutation(g.n).tolist()
        assert abs(lrp_forward(g, model) - lrp_forward(g.relabel(perm), model)) <= 1e-12 * max(1, abs(lrp_forward(g, model)))


def test_attributed_lrp_relabeling_invariance(rng):
    model = LrpModel.init(rng, 6, attributed=True)
    g = random_graph(rng, 8, 0.4, 3, 2)
    assert lrp_forward(g, model) == pytest.approx(lrp_forward(g.relabel(rng.permutation(8).tolist()), model), abs=1e-12)


def test_zero_weights_give_bias():
    model = LrpModel.zeros(4)
    model.params["b1"] = np.array(2.5)
    assert lrp_forward(cycle_graph(5), model) == 2.5


def test_zero_model_gradient_only_reaches_bias():
    grads = lrp_gradient(LrpModel.zeros(4), [(cycle_graph(5), 3.0), (complete_graph(4), 1.0)])
    assert grads["b1"] != 0
    for name in PARAM_NAMES:
        if name != "b1":
            assert not np.any(grads[name])


def test_duplicate_graph_doubles_numerator(rng):
    model = LrpModel.init(rng, 6)
    g, t = random_graph(rng, 8, 0.4), 2.0
    single = lrp_gradient(model, [(g, t)])
    double = lrp_gradient(model, [(g, t), (g, t)])
    # mean over two identical items: the summed numerator doubles, the count doubles
    for name in PARAM_NAMES:
        np.testing.assert_allclose(2 * double[name], 2 * single[name], rtol=1e-12, atol=1e-14)


def _fd_check(model, feats, y, h=1e-5):
    _, grads = mse_and_grad(model, feats, y)
    worst = 0.0
    for name in PARAM_NAMES:
        p = model.params[name]
        flat = p.reshape(-1)
        num = np.zeros(flat.size)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            up = mse_and_grad(model, feats, y)[0]
            flat[i] = old - h
            dn = mse_and_grad(model, feats, y)[0]
            flat[i] = old
            num[i] = (up - dn) / (2 * h)
        ana = np.asarray(grads[name]).reshape(-1)
        denom = max(np.max(np.abs(num)), np.max(np.abs(ana)), 1e-8)
        worst = max(worst, float(np.max(np.abs(num - ana)) / denom))
    return worst


def gradient_check_worst(configs: int = 10, seed: int = 7) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for c in range(configs):
        attributed = c % 2 == 1
        model = LrpModel.init(rng, 3 + c % 3, attributed=attributed)
        gs = [random_graph(rng, int(rng.integers(4, 8)), 0.5, 3 if attributed else 1, 2 if attributed else 1) for _ in range(3)]
        feats = featurize(gs, attributed=attributed)
        y = rng.normal(size=len(gs)) * 3
        worst = max(worst, _fd_check(model, feats, y))
    return worst


def test_gradient_matches_finite_differences():
    assert gradient_check_worst() < 1e-5


def test_model_json_round_trip(rng):
    m = LrpModel.init(rng, 5)
    m2 = LrpModel.from_json_obj(m.to_json_obj())
    g = cycle_graph(6)
    assert lrp_forward(g, m) == lrp_forward(g, m2)
    bad = m.to_json_obj()
    bad["params"]["W1"] = [1.0]
    with pytest.raises(DimensionMismatch):
        LrpModel.from_json_obj(bad)


def test_featurize_subset_matches_direct(rng):
    gs = [random_graph(rng, 7, 0.4) for _ in range(5)]
    model = LrpModel.init(rng, 4)
    full = predict(model, featurize(gs).subset([1, 3]))
    direct = predict(model, featurize([gs[1], gs[3]]))
    np.testing.assert_allclose(full, direct, rtol=1e-12)


# -- training ----------------------------------------------------------------


def _splits(graphs, y):
    feats = featurize(graphs)
    idx = np.arange(len(graphs))
    parts = np.array_split(idx, [len(graphs) * 3 // 10, len(graphs) // 2])
    return tuple((feats.subset(p), y[p]) for p in parts)


def test_constant_target_converges(rng):
    gs = [random_graph(rng, 8, 0.3) for _ in range(40)]
    y = np.full(len(gs), 3.0)
    res = train_lrp(*_splits(gs, y), TrainConfig(hidden=4, epochs=150, lr=0.02), variance=0.0)
    # initial error is about 9; Adam leaves a small noise floor
    assert res.best.test_mse < 2e-3
    assert np.isnan(res.best.test_mse_over_variance)


def test_training_is_deterministic(rng):
    gs = [random_graph(rng, 8, 0.3) for _ in range(30)]
    y = np.array([g.num_edges for g in gs], float)
    s = _splits(gs, y)
    a = train_lrp(*s, TrainConfig(hidden=4, epochs=3, seed=5), float(np.var(y)))
    b = train_lrp(*s, TrainConfig(hidden=4, epochs=3, seed=5), float(np.var(y)))
    assert [m.test_mse for m in a.history] == [m.test_mse for m in b.history]


def test_empty_split_raises(rng):
    gs = [random_graph(rng, 6, 0.3) for _ in range(4)]
    feats = featurize(gs)
    y = np.zeros(4)
    with pytest.raises(EmptySplit):
        train_lrp((feats, y), (feats.subset([]), y[:0]), (feats, y), TrainConfig(epochs=1), 1.0)
