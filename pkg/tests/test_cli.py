import csv
import json

import pytest

from subcount.cli import main
from subcount.errors import DuplicateId
from subcount.experiments import merge_reports, reports_csv, within_class_ratio, wl_bound_check
from subcount.graph import complete_graph, cycle_graph, disjoint_union, serialize, to_json


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def dataset(tmp_path):
    d = tmp_path / "ds"
    assert run("gen", "--family", "er", "--count", 30, "--seed", 3, "--out", d) == 0
    return d


def test_gen_is_deterministic(tmp_path, dataset):
    other = tmp_path / "again"
    run("gen", "--family", "er", "--count", 30, "--seed", 3, "--out", other)
    assert (other / "graphs.jsonl").read_text() == (dataset / "graphs.jsonl").read_text()
    assert (other / "splits.json").read_text() == (dataset / "splits.json").read_text()


def test_seed_is_mandatory(tmp_path, capsys):
    assert run("gen", "--family", "er", "--count", 3, "--out", tmp_path / "x") == 2
    assert "--seed" in capsys.readouterr().err
    assert run("verify", "star-cc") == 2


def test_global_flags_before_subcommand(tmp_path):
    assert run("--seed", 1, "gen", "--family", "rr", "--count", 5, "--out", tmp_path / "rr") == 0


def test_label_and_count(dataset, tmp_path):
    assert run("label", "--dataset", dataset, "--task", "triangle") == 0
    out = tmp_path / "counts.csv"
    assert run("count", "--graphs", dataset, "--pattern", "builtin:triangle", "--mode", "matching", "--out", out) == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["graph_id", "count"] and len(rows) == 30
    labels = list(csv.DictReader((dataset / "labels.csv").open()))
    assert [r["count"] for r in rows] == [r["triangle"] for r in labels]
    par = tmp_path / "par.csv"
    run("--threads", 2, "count", "--graphs", dataset, "--pattern", "builtin:triangle", "--mode", "matching", "--out", par)
    assert par.read_text() == out.read_text()


def test_count_text_file_and_pattern_file(tmp_path):
    g = tmp_path / "g.txt"
    g.write_text(serialize(complete_graph(4)))
    p = tmp_path / "p.txt"
    p.write_text(serialize(complete_graph(3)))
    out = tmp_path / "c.csv"
    assert run("count", "--graphs", g, "--pattern", p, "--mode", "containment", "--out", out) == 0
    assert out.read_text().splitlines() == ["graph_id,count", "0,4"]


def test_wl_command(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    a.write_text(to_json(cycle_graph(6)))
    b.write_text(to_json(disjoint_union(complete_graph(3), complete_graph(3))))
    trace = tmp_path / "t.json"
    assert run("wl", "--g1", a, "--g2", b, "--k", 2, "--trace", trace) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "indistinguishable_stable"
    assert json.loads(trace.read_text())["iterations"]
    assert run("wl", "--g1", a, "--g2", b, "--k", 3, "--iters", 0) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "distinguished"
    assert run("wl", "--g1", a, "--g2", b, "--k", 6, "--budget", 100) == 3


def test_counterexample_command(tmp_path):
    out = tmp_path / "ce.json"
    assert run("counterexample", "--construction", "doubled", "--pattern", "builtin:path:3", "--verify", "--out", out) == 0
    obj = json.loads(out.read_text())
    assert obj["verification"]["count_g2"] == 2 and obj["g1"]["n"] == 6
    assert run("counterexample", "--construction", "path", "--k", 2, "--T", 1, "--m", 6, "--verify", "--out", out) == 0
    assert json.loads(out.read_text())["verification"]["count_g2"] == 12
    # out-of-guarantee run reports a verification failure
    assert run("counterexample", "--construction", "doubled", "--pattern", "builtin:triangle", "--k", 3, "--T", 0,
               "--verify", "--out", out) == 1
    assert run("counterexample", "--construction", "path", "--out", out) == 2


def test_train_command(dataset, tmp_path):
    model, metrics = tmp_path / "model.json", tmp_path / "metrics.csv"
    assert run("train", "--dataset", dataset, "--task", "triangle", "--model", "lrp", "--H", 4, "--lr", 0.05,
               "--epochs", 3, "--seed", 0, "--out", f"{model},{metrics}") == 0
    rows = list(csv.DictReader(metrics.open()))
    assert list(rows[0]) == ["epoch", "train_mse", "val_mse", "test_mse", "test_mse_over_variance"]
    assert len(rows) == 3
    assert json.loads(model.read_text())["hidden"] == 4
    first = metrics.read_text()
    run("train", "--dataset", dataset, "--task", "triangle", "--H", 4, "--lr", 0.05, "--epochs", 3, "--seed", 0,
        "--out", f"{model},{metrics}")
    assert metrics.read_text() == first


def test_verify_and_report(tmp_path, capsys):
    v = tmp_path / "v.json"
    assert run("verify", "thm5", "--out", v) == 0
    assert "PASS thm5" in capsys.readouterr().out
    w = tmp_path / "w.json"
    assert run("reproduce", "wl-bound", "--seed", 0, "--out", w) == 0
    merged = tmp_path / "m.csv"
    assert run("report", w, v, "--out", merged) == 0
    rows = list(csv.DictReader(merged.open()))
    assert [r["id"] for r in rows] == ["thm5", "wl-bound-k2"]
    assert run("report", v, v, "--out", merged) == 2
    assert run("report", tmp_path / "missing.json") == 2


def test_report_helpers():
    assert reports_csv([]).splitlines() == ["id,kind,passed,instances_checked,best,median,threshold,seconds"]
    assert [r["id"] for r in merge_reports([{"id": "b"}, {"id": "a"}])] == ["a", "b"]
    with pytest.raises(DuplicateId):
        merge_reports([{"id": "a"}, {"id": "a"}])


def test_within_class_ratio():
    assert within_class_ratio([0, 0, 1, 1], [1.0, 1.0, 2.0, 2.0]) == 0.0
    assert within_class_ratio([0, 0], [0.0, 2.0]) == pytest.approx(1.0)


def test_wl_bound_sanity():
    r = wl_bound_check(seed=0, n_random=60)
    assert r["passed"] and r["bound"] > 0
    assert r["regressor_normalized_mse"] >= r["bound"] - 1e-9


def test_unknown_command_is_usage_error():
    assert run("frobnicate") == 2
