"""Command-line entry point: ``subcount <command> ...``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 budget or
resource error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import datasets as ds_mod
from .counterexamples import doubled_pattern_pair, path_counterexample_pair, verify_pair
from .counting import CountMode, Pattern, builtin_pattern, fast_count
from .errors import BudgetExceeded, PatternTooLarge, SizeLimitExceeded, SubcountError
from .experiments import ROWS, SCALES, load_reports, merge_reports, reproduce, reports_csv, wl_bound_check
from .graph import AttributedGraph, from_json_obj, parse_many, to_json_obj
from .models.lrp import featurize
from .models.train import TrainConfig, train_lrp
from .verify import STOCHASTIC, THEOREMS, run_verification
from .wl import DEFAULT_BUDGET, wl_refine_pair

log = logging.getLogger("subcount")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


# -- input helpers -----------------------------------------------------------


def read_graphs(path: str) -> list[AttributedGraph]:
    """Graphs from a dataset directory, a ``.jsonl``/``.json`` file, or the text format."""
    p = Path(path)
    if p.is_dir():
        return ds_mod.read_graphs_jsonl(p / "graphs.jsonl")
    if p.suffix == ".jsonl":
        return ds_mod.read_graphs_jsonl(p)
    text = p.read_text(encoding="utf-8")
    if p.suffix == ".json":
        obj = json.loads(text)
        return [from_json_obj(o) for o in obj] if isinstance(obj, list) else [from_json_obj(obj)]
    return parse_many(text)


def read_graph(path: str) -> AttributedGraph:
    graphs = read_graphs(path)
    if len(graphs) != 1:
        raise UsageError(f"{path}: expected exactly one graph, found {len(graphs)}")
    return graphs[0]


def read_pattern(spec: str) -> Pattern:
    if spec.startswith("builtin:") or not Path(spec).exists():
        return builtin_pattern(spec)
    return Pattern(read_graph(spec), name=Path(spec).stem)


def _require_seed(args) -> int:
    if args.seed is None:
        raise UsageError(f"--seed is required for '{args.command}'")
    return args.seed


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, CountMode):
        return o.value
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


# -- commands ----------------------------------------------------------------


def cmd_gen(args) -> int:
    seed = _require_seed(args)
    params = {}
    if args.family == "er":
        params = {"m": args.m, "p": args.p}
    graphs, meta = ds_mod.generate(args.family, args.count, seed, **params)
    ds_mod.save_dataset(Path(args.out), graphs, meta)
    log.info("wrote %d graphs to %s", len(graphs), args.out)
    return EXIT_OK


def cmd_label(args) -> int:
    ds = ds_mod.label_directory(Path(args.dataset), args.task)
    print(f"{args.task}: {len(ds)} graphs, label variance {ds.variance:.6g}")
    return EXIT_OK


def _count_chunk(job):
    graphs, pattern, mode = job
    return [fast_count(g, pattern, mode) for g in graphs]


def cmd_count(args) -> int:
    graphs = read_graphs(args.graphs)
    pattern = read_pattern(args.pattern)
    mode = CountMode(args.mode)
    if args.threads > 1 and len(graphs) > 1:
        chunks = np.array_split(np.arange(len(graphs)), args.threads)
        jobs = [([graphs[i] for i in c], pattern, mode) for c in chunks]
        with ProcessPoolExecutor(max_workers=args.threads) as ex:
            counts = [c for part in ex.map(_count_chunk, jobs) for c in part]
    else:
        counts = _count_chunk((graphs, pattern, mode))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["graph_id", "count"])
    w.writerows(enumerate(counts))
    _write(args.out, buf.getvalue())
    return EXIT_OK


def cmd_wl(args) -> int:
    g1, g2 = read_graph(args.g1), read_graph(args.g2)
    iters = None if args.iters == "stable" else int(args.iters)
    res = wl_refine_pair(g1, g2, args.k, iters, args.budget)
    print(json.dumps({"verdict": res.verdict.value, "iteration": res.iteration}))
    if args.trace:
        _write(args.trace, _dump(res.to_json_obj()))
    return EXIT_OK


def cmd_counterexample(args) -> int:
    if args.construction == "doubled":
        if not args.pattern:
            raise UsageError("--pattern is required for the doubled construction")
        cp = doubled_pattern_pair(read_pattern(args.pattern))
        k, T = args.k or 2, args.T
    else:
        if args.k is None or args.T is None:
            raise UsageError("--k and --T are required for the path construction")
        m = args.m if args.m is not None else (args.k + 1) * 2**args.T
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            cp = path_counterexample_pair(args.k, args.T, m)
        for w in caught:
            log.warning("%s", w.message)
        k, T = args.k, args.T
    ex = cp.expected
    out = {
        "construction": cp.construction,
        "params": cp.params,
        "in_regime": cp.in_regime,
        "expected": {"pattern": ex.pattern.name, "mode": ex.mode.value, "count_g1": ex.count_g1,
                     "count_g2": ex.count_g2, "count_g2_exact": ex.count_g2_exact},
        "g1": to_json_obj(cp.g1),
        "g2": to_json_obj(cp.g2),
    }
    code = EXIT_OK
    if args.verify:
        r = verify_pair(cp, k, T, args.budget)
        out["verification"] = r.to_json_obj()
        print(f"{'PASS' if r.passed else 'FAIL'} {cp.construction} counts {r.count_g1} vs {r.count_g2}, {r.verdict}")
        code = EXIT_OK if r.passed else EXIT_FAIL
    _write(args.out, _dump(out))
    return code


def cmd_train(args) -> int:
    seed = _require_seed(args)
    outs = args.out.split(",")
    if len(outs) != 2:
        raise UsageError("--out takes model.json,metrics.csv")
    ds, splits = ds_mod.load_dataset(Path(args.dataset), args.task)
    feats = featurize(ds.graphs)
    parts = tuple((feats.subset(splits[s]), ds.labels[splits[s]]) for s in ("train", "val", "test"))
    cfg = TrainConfig(hidden=args.H, lr=args.lr, epochs=args.epochs, batch_size=args.batch_size, seed=seed)
    res = train_lrp(*parts, cfg, ds.variance)
    model_obj = res.model.to_json_obj()
    model_obj.update(task=args.task, best_epoch=res.best_epoch, seed=seed)
    Path(outs[0]).write_text(_dump(model_obj))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epoch", "train_mse", "val_mse", "test_mse", "test_mse_over_variance"])
    for m in res.history:
        w.writerow([m.epoch, repr(m.train_mse), repr(m.val_mse), repr(m.test_mse), repr(m.test_mse_over_variance)])
    Path(outs[1]).write_text(buf.getvalue())
    print(f"best epoch {res.best_epoch}: normalized test MSE {res.best.test_mse_over_variance:.4g}")
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.theorem == "all" or args.theorem in STOCHASTIC:
        seed = _require_seed(args)
    else:
        seed = args.seed or 0
    reports = run_verification(args.theorem, seed, args.budget)
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.theorem}: {len(r.instances)} instances in {r.seconds:.2f}s")
        if not r.passed:
            print("  first failing instance: " + json.dumps(r.first_failure, default=_json_default))
    objs = [r.to_json_obj() for r in reports]
    if args.out:
        _write(args.out, _dump(objs[0] if len(objs) == 1 else objs))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_reproduce(args) -> int:
    seed = _require_seed(args)
    rows = ROWS if args.row == "all" else (args.row,)
    objs, ok = [], True
    for row in rows:
        if row == "wl-bound":
            obj = wl_bound_check(seed)
            print(f"{'PASS' if obj['passed'] else 'FAIL'} wl-bound: floor {obj['bound']:.4g}, "
                  f"histogram regressor {obj['regressor_normalized_mse']:.4g}")
        else:
            rep = reproduce(row, args.scale, seed, args.runs, args.threads)
            obj = rep.to_json_obj()
            ref = rep.published_reference
            print(f"{'PASS' if rep.passed else 'FAIL'} {row} ({args.scale}): best {rep.best:.3g}, "
                  f"median {rep.median:.3g}; published best {ref['best']:.3g}, median {ref['median']:.3g}")
        ok &= obj["passed"]
        objs.append(obj)
    if args.out:
        _write(args.out, _dump(objs[0] if len(objs) == 1 else objs))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_report(args) -> int:
    reports = merge_reports(load_reports(args.inputs))
    if args.out and args.out.endswith(".json"):
        _write(args.out, _dump(reports))
    else:
        _write(args.out, reports_csv(reports))
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", type=int, default=d, help="root seed; required by stochastic commands")
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS if suppress else 1, help="worker processes")
    p.add_argument("--budget", type=int, default=argparse.SUPPRESS if suppress else DEFAULT_BUDGET,
                   help="maximum n^k tuples per graph for k-WL")
    p.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS if suppress else 0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subcount", description="Substructure counting, k-WL and LRP tools.")
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a random graph dataset")
    p.add_argument("--family", choices=["er", "rr"], required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--m", type=int, default=10, help="ER node count")
    p.add_argument("--p", type=float, default=0.3, help="ER edge probability")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("label", parents=[common], help="add ground-truth counts to a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--task", choices=sorted(ds_mod.TASKS), required=True)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("count", parents=[common], help="count a pattern in each graph")
    p.add_argument("--graphs", required=True)
    p.add_argument("--pattern", required=True, help="graph file or builtin:triangle|3star|path:m|star:m|clique:m|cycle:m")
    p.add_argument("--mode", choices=[m.value for m in CountMode], required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("wl", parents=[common], help="run k-WL on a pair of graphs")
    p.add_argument("--g1", required=True)
    p.add_argument("--g2", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--iters", default="stable", help="integer or 'stable'")
    p.add_argument("--trace")
    p.set_defaults(func=cmd_wl)

    p = sub.add_parser("counterexample", parents=[common], help="build a counting counterexample pair")
    p.add_argument("--construction", choices=["doubled", "path"], required=True)
    p.add_argument("--pattern")
    p.add_argument("--k", type=int)
    p.add_argument("--T", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--verify", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("train", parents=[common], help="train an LRP regressor")
    p.add_argument("--dataset", required=True)
    p.add_argument("--task", choices=sorted(ds_mod.TASKS), required=True)
    p.add_argument("--model", choices=["lrp"], default="lrp")
    p.add_argument("--H", type=int, default=16)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--out", required=True, help="model.json,metrics.csv")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("verify", parents=[common], help="run a verification sweep")
    p.add_argument("theorem", choices=[*THEOREMS, "all"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("reproduce", parents=[common], help="train five seeds on a benchmark row")
    p.add_argument("row", choices=[*ROWS, "wl-bound", "all"])
    p.add_argument("--scale", choices=sorted(SCALES), default="desk")
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("report", parents=[common], help="merge report files into CSV or JSON")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (BudgetExceeded, SizeLimitExceeded, PatternTooLarge, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (UsageError, SubcountError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
