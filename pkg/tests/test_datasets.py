import json

import numpy as np
import pytest

from subcount.counting import CountMode
from subcount.datasets import (
    DEFAULT_RR_CONFIGS,
    SplitSpec,
    gen_erdos_renyi,
    gen_random_regular,
    generate,
    label_dataset,
    label_directory,
    load_dataset,
    random_regular,
    save_dataset,
    split,
    split_indices,
    stream,
)
from subcount.errors import TooFewGraphs, ValidationError
from subcount.graph import complete_graph, disjoint_union


def test_er_extremes():
    assert all(g.num_edges == 0 for g in gen_erdos_renyi(5, 6, 0.0, 1))
    assert all(g == complete_graph(6) for g in gen_erdos_renyi(5, 6, 1.0, 1))
    with pytest.raises(ValidationError):
        gen_erdos_renyi(5, 6, 1.5, 1)


def test_er_is_deterministic_and_prefix_stable():
    a = gen_erdos_renyi(20, 10, 0.3, 4)
    assert a == gen_erdos_renyi(20, 10, 0.3, 4)
    # per-graph streams: a shorter run is a prefix of a longer one
    assert gen_erdos_renyi(7, 10, 0.3, 4) == a[:7]
    assert a != gen_erdos_renyi(20, 10, 0.3, 5)


def test_er_edge_density():
    gs = gen_erdos_renyi(500, 10, 0.3, 0)
    mean = np.mean([g.num_edges for g in gs])
    assert abs(mean - 13.5) < 0.6


def test_streams_are_named_and_indexed():
    a = stream(0, "x", 0).random(4)
    assert np.array_equal(a, stream(0, "x", 0).random(4))
    assert not np.array_equal(a, stream(0, "y", 0).random(4))
    assert not np.array_equal(a, stream(0, "x", 1).random(4))


def test_random_regular_degrees():
    rng = np.random.default_rng(0)
    for n, d in DEFAULT_RR_CONFIGS:
        g = random_regular(n, d, rng)
        assert set(g.degrees()) == {d}
    with pytest.raises(ValidationError):
        random_regular(5, 3, rng)


def test_rr_before_and_after_deletion():
    before = gen_random_regular(40, seed=3, delete_edges=False)
    after = gen_random_regular(40, seed=3)
    for b, a in zip(before, after):
        d = b.degree(0)
        assert set(b.degrees()) == {d}
        assert a.n == b.n
        assert a.num_edges == b.n * d // 2 - b.n
        assert a.edges <= b.edges
    assert {g.n for g in after} == {n for n, _ in DEFAULT_RR_CONFIGS}


def test_labels_examples():
    ds = label_dataset([disjoint_union(complete_graph(3), complete_graph(3))], "triangle")
    assert ds.labels.tolist() == [2.0] and ds.mode is CountMode.MATCHING
    assert label_dataset([complete_graph(4)], "3star").labels.tolist() == [4.0]
    with pytest.raises(ValidationError):
        label_dataset([complete_graph(4)], "square")


def test_split_sizes():
    for n, sizes in [(5000, (1500, 1000, 2500)), (10, (3, 2, 5)), (11, (3, 2, 6))]:
        idx = split_indices(n, SplitSpec(seed=1))
        assert (len(idx["train"]), len(idx["val"]), len(idx["test"])) == sizes
        assert sorted(idx["train"] + idx["val"] + idx["test"]) == list(range(n))
    assert split_indices(100, SplitSpec(seed=2)) == split_indices(100, SplitSpec(seed=2))
    assert split_indices(100, SplitSpec(seed=2)) != split_indices(100, SplitSpec(seed=3))
    with pytest.raises(TooFewGraphs):
        split_indices(9, SplitSpec())
    with pytest.raises(ValidationError):
        SplitSpec(0.5, 0.5, 0.5)


def test_split_dataset_objects():
    ds = label_dataset(gen_erdos_renyi(20, 8, 0.3, 0), "triangle")
    tr, va, te = split(ds, SplitSpec(seed=0))
    assert (len(tr), len(va), len(te)) == (6, 4, 10)
    assert np.isclose(ds.variance, np.var(ds.labels))


def test_directory_round_trip(tmp_path):
    graphs, meta = generate("er", 30, 9)
    save_dataset(tmp_path, graphs, meta)
    assert {p.name for p in tmp_path.iterdir()} == {"meta.json", "graphs.jsonl", "splits.json"}
    ds = label_directory(tmp_path, "triangle")
    label_directory(tmp_path, "3star")
    m = json.loads((tmp_path / "meta.json").read_text())
    assert m["generator"] == "er" and m["seed"] == 9
    assert m["tasks"]["triangle"]["variance"] == pytest.approx(ds.variance)
    header = (tmp_path / "labels.csv").read_text().splitlines()[0]
    assert header == "graph_id,3star,triangle"
    loaded, splits = load_dataset(tmp_path, "triangle")
    assert loaded.graphs == graphs and np.array_equal(loaded.labels, ds.labels)
    assert len(splits["test"]) == 15


def test_rr_generate_meta():
    graphs, meta = generate("rr", 12, 0)
    assert meta["generator"] == "rr" and len(graphs) == 12
    with pytest.raises(ValidationError):
        generate("ba", 3, 0)
