"""Synthetic graph families, ground-truth labels, splits and the dataset directory format.

Randomness: every graph draws from its own Philox stream keyed by
``SeedSequence([seed, crc32(stream_name), index])``, so a dataset is the same
whether graphs are generated serially, in parallel, or one at a time.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import zlib
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .counting import CountMode, Pattern, count, fast_count, star_pattern, triangle_pattern
from .errors import GenerationFailure, TooFewGraphs, ValidationError
from .graph import AttributedGraph, from_json_obj, to_json_obj

DEFAULT_RR_CONFIGS = ((10, 6), (15, 6), (20, 5), (30, 5))

TASKS: dict[str, tuple] = {
    "triangle": (triangle_pattern, CountMode.MATCHING),
    "3star": (lambda: star_pattern(4), CountMode.CONTAINMENT),
}


def task_pattern(task: str) -> tuple[Pattern, CountMode]:
    try:
        make, mode = TASKS[task]
    except KeyError:
        raise ValidationError(f"unknown task {task!r}; choose from {sorted(TASKS)}") from None
    return make(), mode


def stream(seed: int, name: str, index: int = 0) -> np.random.Generator:
    """Named, indexable random stream (Philox counter-based generator)."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(name.encode()), int(index)])
    return np.random.Generator(np.random.Philox(ss))


# -- generators --------------------------------------------------------------


def erdos_renyi(m: int, p: float, rng: np.random.Generator) -> AttributedGraph:
    pairs = list(itertools.combinations(range(m), 2))
    keep = rng.random(len(pairs)) < p
    return AttributedGraph(m, [e for e, k in zip(pairs, keep) if k])


def gen_erdos_renyi(count: int, m: int, p: float, seed: int) -> list[AttributedGraph]:
    if count < 1:
        raise ValidationError("count must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValidationError("edge probability must lie in [0, 1]")
    return [erdos_renyi(m, p, stream(seed, "er", i)) for i in range(count)]


def _pairing_round(n: int, d: int, rng: np.random.Generator) -> set[tuple[int, int]] | None:
    """One attempt of the pairing model that re-pairs only the clashing points.

    Points are shuffled and paired; pairs that would form a loop or repeat an
    edge go back into the pool, which is re-shuffled until it empties or no
    admissible pair is left (then the attempt fails).
    """
    edges: set[tuple[int, int]] = set()
    points = np.repeat(np.arange(n), d)
    while len(points):
        rng.shuffle(points)
        leftover: dict[int, int] = defaultdict(int)
        for a, b in zip(points[0::2].tolist(), points[1::2].tolist()):
            e = (a, b) if a < b else (b, a)
            if a != b and e not in edges:
                edges.add(e)
            else:
                leftover[a] += 1
                leftover[b] += 1
        if not leftover:
            break
        nodes = sorted(leftover)
        if not any((u, v) not in edges for u, v in itertools.combinations(nodes, 2)):
            return None
        points = np.array([v for v in nodes for _ in range(leftover[v])], dtype=np.int64)
    return edges


def random_regular(n: int, d: int, rng: np.random.Generator, max_retries: int = 10_000) -> AttributedGraph:
    if (n * d) % 2 or not 0 <= d < n:
        raise ValidationError(f"no simple {d}-regular graph on {n} nodes")
    for _ in range(max_retries):
        edges = _pairing_round(n, d, rng)
        if edges is not None:
            return AttributedGraph(n, sorted(edges))
    raise GenerationFailure(f"pairing model failed {max_retries} times for n={n}, d={d}")


def delete_random_edges(g: AttributedGraph, count: int, rng: np.random.Generator) -> AttributedGraph:
    edges = g.sorted_edges()
    if count > len(edges):
        raise ValidationError(f"cannot delete {count} of {len(edges)} edges")
    drop = set(rng.choice(len(edges), size=count, replace=False).tolist())
    return AttributedGraph(g.n, [e for r, e in enumerate(edges) if r not in drop])


def gen_random_regular(
    count: int,
    configs: Sequence[tuple[int, int]] = DEFAULT_RR_CONFIGS,
    seed: int = 0,
    delete_edges: bool = True,
) -> list[AttributedGraph]:
    """Random ``d``-regular graphs on ``m`` nodes, ``(m, d)`` drawn uniformly from ``configs``,
    each with ``m`` uniformly chosen edges deleted afterwards."""
    if count < 1:
        raise ValidationError("count must be >= 1")
    for m, d in configs:
        if (m * d) % 2 or d >= m:
            raise ValidationError(f"invalid random-regular config ({m}, {d})")
    out = []
    for i in range(count):
        rng = stream(seed, "rr", i)
        m, d = configs[int(rng.integers(len(configs)))]
        g = random_regular(m, d, rng)
        out.append(delete_random_edges(g, m, rng) if delete_edges else g)
    return out


# -- labels and splits -------------------------------------------------------


@dataclass
class LabeledDataset:
    graphs: list[AttributedGraph]
    labels: np.ndarray
    task: str
    mode: CountMode
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=float)
        if len(self.graphs) != len(self.labels):
            raise ValidationError("graphs and labels differ in length")

    def __len__(self):
        return len(self.graphs)

    @property
    def variance(self) -> float:
        return float(np.var(self.labels)) if len(self.labels) else 0.0

    def subset(self, idx) -> "LabeledDataset":
        idx = list(idx)
        return LabeledDataset([self.graphs[i] for i in idx], self.labels[idx], self.task, self.mode,
                              dict(self.meta, indices=idx))


def label_graphs(graphs: Sequence[AttributedGraph], task: str, check: int = 50, seed: int = 0) -> np.ndarray:
    """Ground-truth counts, using closed forms where available.

    ``check`` graphs (chosen with ``seed``) are recounted with the generic
    routine; a disagreement raises ``AssertionError``.
    """
    pattern, mode = task_pattern(task)
    labels = np.array([fast_count(g, pattern, mode) for g in graphs], dtype=float)
    if check and len(graphs):
        rng = stream(seed, "label-check")
        for i in rng.choice(len(graphs), size=min(check, len(graphs)), replace=False).tolist():
            slow = count(graphs[i], pattern, mode)
            if slow != labels[i]:
                raise AssertionError(f"fast count {labels[i]} != generic count {slow} on graph {i}")
    return labels


def label_dataset(graphs: Sequence[AttributedGraph], task: str, meta: dict | None = None, check: int = 50) -> LabeledDataset:
    _, mode = task_pattern(task)
    return LabeledDataset(list(graphs), label_graphs(graphs, task, check), task, mode, dict(meta or {}))


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.3
    val: float = 0.2
    test: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if abs(self.train + self.val + self.test - 1.0) > 1e-9 or min(self.train, self.val, self.test) < 0:
            raise ValidationError("split fractions must be non-negative and sum to 1")


def split_indices(n: int, spec: SplitSpec) -> dict[str, list[int]]:
    """Seeded shuffle, then floor(train*n) / floor(val*n) / remainder."""
    if n < 10:
        raise TooFewGraphs(f"need at least 10 graphs to split, got {n}")
    perm = stream(spec.seed, "split").permutation(n).tolist()
    n_tr = int(np.floor(spec.train * n + 1e-9))
    n_va = int(np.floor(spec.val * n + 1e-9))
    return {"train": perm[:n_tr], "val": perm[n_tr : n_tr + n_va], "test": perm[n_tr + n_va :]}


def split(ds: LabeledDataset, spec: SplitSpec = SplitSpec()) -> tuple[LabeledDataset, LabeledDataset, LabeledDataset]:
    idx = split_indices(len(ds), spec)
    return ds.subset(idx["train"]), ds.subset(idx["val"]), ds.subset(idx["test"])


# -- directory format --------------------------------------------------------


def generate(family: str, count: int, seed: int, **params) -> tuple[list[AttributedGraph], dict]:
    if family == "er":
        m, p = params.get("m", 10), params.get("p", 0.3)
        return gen_erdos_renyi(count, m, p, seed), {"generator": "er", "params": {"m": m, "p": p}, "seed": seed, "count": count}
    if family == "rr":
        configs = [tuple(c) for c in params.get("configs", DEFAULT_RR_CONFIGS)]
        return gen_random_regular(count, configs, seed), {
            "generator": "rr", "params": {"configs": [list(c) for c in configs], "delete_edges": "m"},
            "seed": seed, "count": count,
        }
    raise ValidationError(f"unknown family {family!r}")


def write_graphs_jsonl(path: Path, graphs: Sequence[AttributedGraph]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for g in graphs:
            fh.write(json.dumps(to_json_obj(g), separators=(",", ":")) + "\n")


def read_graphs_jsonl(path: Path) -> list[AttributedGraph]:
    with open(path, encoding="utf-8") as fh:
        return [from_json_obj(json.loads(line)) for line in fh if line.strip()]


def save_dataset(out: Path, graphs: Sequence[AttributedGraph], meta: dict, split_spec: SplitSpec | None = None) -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    write_graphs_jsonl(out / "graphs.jsonl", graphs)
    spec = split_spec or SplitSpec(seed=meta.get("seed", 0))
    meta = dict(meta, split={"train": spec.train, "val": spec.val, "test": spec.test, "seed": spec.seed})
    meta.setdefault("tasks", {})
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    if len(graphs) >= 10:
        (out / "splits.json").write_text(json.dumps(split_indices(len(graphs), spec)) + "\n")


def load_meta(path: Path) -> dict:
    return json.loads((Path(path) / "meta.json").read_text())


def read_labels(path: Path) -> dict[str, np.ndarray]:
    f = Path(path) / "labels.csv"
    if not f.exists():
        return {}
    with open(f, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return {}
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0] if k != "graph_id"}


def write_labels(path: Path, columns: dict[str, np.ndarray]) -> None:
    names = sorted(columns)
    n = len(next(iter(columns.values()))) if columns else 0
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["graph_id", *names])
    for i in range(n):
        w.writerow([i, *(_fmt_label(columns[c][i]) for c in names)])
    (Path(path) / "labels.csv").write_text(buf.getvalue())


def _fmt_label(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def label_directory(path: Path, task: str, check: int = 50) -> LabeledDataset:
    """Compute labels for ``task`` and record them in ``labels.csv`` and ``meta.json``."""
    path = Path(path)
    graphs = read_graphs_jsonl(path / "graphs.jsonl")
    meta = load_meta(path)
    ds = label_dataset(graphs, task, meta, check)
    cols = read_labels(path)
    cols[task] = ds.labels
    write_labels(path, cols)
    pattern, mode = task_pattern(task)
    meta.setdefault("tasks", {})[task] = {"pattern": pattern.name, "mode": mode.value, "variance": ds.variance}
    (path / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return ds


def load_dataset(path: Path, task: str) -> tuple[LabeledDataset, dict[str, list[int]]]:
    """Labeled dataset plus its split indices; labels are computed if missing."""
    path = Path(path)
    cols = read_labels(path)
    if task not in cols:
        ds = label_directory(path, task)
    else:
        _, mode = task_pattern(task)
        ds = LabeledDataset(read_graphs_jsonl(path / "graphs.jsonl"), cols[task], task, mode, load_meta(path))
    splits_file = path / "splits.json"
    if splits_file.exists():
        splits = json.loads(splits_file.read_text())
    else:
        s = ds.meta.get("split", {})
        splits = split_indices(len(ds), SplitSpec(seed=s.get("seed", ds.meta.get("seed", 0))))
    return ds, splits
