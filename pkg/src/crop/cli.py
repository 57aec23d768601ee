"""Command-line surface: multiply, mine, bench, and generate.

Every run is driven by a single --seed; all derived randomness is recorded in
a manifest written to the output directory before any result file. Exit
codes: 0 success, 2 input error, 3 configuration error, 4 resource cap hit.
No result files are written when a command fails.
"""

import argparse
import csv
import hashlib
import json
import logging
import multiprocessing
import os
import sys
import time
from pathlib import Path

from .engine import (
    EngineConfig,
    LoadReport,
    TripleFileSource,
    measure_loads,
    run,
    run_parallel,
    save_state,
)
from .errors import ConfigError, InputError, ResourceCapError
from .mining import FimiFileSource, bound_ratio_report, mine, recall_at_k, transactions_to_stream
from .oracle import (
    ZipfModel,
    exact_pair_supports,
    exact_product,
    exact_top,
    gen_zipf_stream,
    gen_zipf_transactions,
)
from .sparse import load_column_row_streams, read_fimi, write_triple_file

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONFIG = 3
EXIT_RESOURCE = 4


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _default_workers() -> int:
    return int(os.environ.get("CROP_WORKERS", "1"))


def _engine_config(args) -> EngineConfig:
    return EngineConfig(
        kappa=args.kappa,
        ss_capacity=args.ss_capacity,
        workers=args.workers,
        cs_enabled=not args.no_countsketch,
        instances=args.instances,
        seed=args.seed,
    )


def _manifest(command: str, args, config: EngineConfig | None, inputs: list, timings: dict,
              report: LoadReport | None = None, extra: dict | None = None) -> dict:
    arg_echo = {k: v for k, v in vars(args).items() if k != "func"}
    doc = {
        "command": command,
        "args": {k: (str(v) if isinstance(v, Path) else v) for k, v in arg_echo.items()},
        "inputs": [{"path": str(p), "sha256": _sha256(p)} for p in inputs],
        "timings_seconds": timings,
    }
    if config is not None:
        doc["config"] = config.to_dict()
        doc["instance_seeds"] = config.instance_seeds()
    if report is not None:
        doc["load"] = {
            "worker_counts": report.rows,
            "assignments": report.assignments,
            "total_entries": report.total_entries,
            "max_avg_ratio": report.max_avg_ratio(),
        }
    if extra:
        doc.update(extra)
    return doc


def _write_manifest(outdir: Path, doc: dict) -> None:
    with open(outdir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)


def _write_topk_csv(path, entries, left_label: str, right_label: str,
                    truth: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        header = ["rank", left_label, right_label, "lower", "upper", "cs_estimate"]
        if truth is not None:
            header.append("true")
        writer.writerow(header)
        for rank, top in enumerate(entries, start=1):
            est = "" if top.estimate is None else repr(top.estimate)
            row = [rank, top.entry.row, top.entry.col, repr(top.lower), repr(top.upper), est]
            if truth is not None:
                row.append(repr(float(truth.get(tuple(top.entry), 0.0))))
            writer.writerow(row)


def _write_load_report(path, report: LoadReport) -> None:
    doc = {
        "kappa": report.kappa,
        "workers": report.workers,
        "assignments": report.assignments,
        "worker_counts": report.rows,
        "total_entries": report.total_entries,
        "expected_per_worker": report.expected_per_worker,
        "max_avg_ratio": report.max_avg_ratio(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)


def cmd_multiply(args) -> int:
    t0 = time.perf_counter()
    stream = load_column_row_streams(args.a, args.b)
    config = _engine_config(args)
    t_load = time.perf_counter() - t0

    t0 = time.perf_counter()
    state, report = run(stream, config)
    t_run = time.perf_counter() - t0

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    timings = {"load": t_load, "run": t_run}
    _write_manifest(outdir, _manifest("multiply", args, config, [args.a, args.b], timings, report))
    _write_topk_csv(outdir / "topk.csv", state.top_entries(args.top), "row", "col")
    save_state(outdir / "state.json", state, binary_cs=args.binary_state)
    _write_load_report(outdir / "load_report.json", report)
    print(f"multiply: {report.total_entries} entries over {config.workers} workers, "
          f"max/avg {report.max_avg_ratio():.4f}; results in {outdir}")
    return EXIT_OK


def cmd_mine(args) -> int:
    t0 = time.perf_counter()
    transactions = read_fimi(args.fimi)
    stream = transactions_to_stream(transactions, args.dim)
    config = _engine_config(args)
    t_load = time.perf_counter() - t0

    t0 = time.perf_counter()
    state, report = run(stream, config, upper_triangle_only=True)
    t_run = time.perf_counter() - t0

    truth = None
    metrics = {}
    if args.exact_oracle:
        t0 = time.perf_counter()
        truth = dict(exact_pair_supports(transactions))
        k = min(args.top, len(truth))
        oracle_topk = [entry for entry, _ in exact_top(truth, k)]
        metrics["recall_at_k"] = recall_at_k(state, oracle_topk, k) if k else 1.0
        _, fraction = bound_ratio_report(state, truth, k)
        metrics["fraction_tight_90"] = fraction
        metrics["oracle_seconds"] = time.perf_counter() - t0

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    timings = {"load": t_load, "run": t_run}
    extra = {"pair_occurrences": report.total_entries}
    if metrics:
        extra["oracle_metrics"] = metrics
    _write_manifest(outdir, _manifest("mine", args, config, [args.fimi], timings, report, extra))
    _write_topk_csv(outdir / "topk.csv", state.top_entries(args.top), "item_i", "item_j",
                    truth=truth)
    save_state(outdir / "state.json", state, binary_cs=args.binary_state)
    _write_load_report(outdir / "load_report.json", report)
    if truth is not None:
        rows, fraction = bound_ratio_report(state, truth, args.top)
        with open(outdir / "bound_ratios.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["item_i", "item_j", "true", "lower", "upper",
                             "lower_over_true", "upper_over_true", "lower_over_upper"])
            for (entry, true_w, lower, upper, lt, ut, tight) in rows:
                writer.writerow([entry[0], entry[1], repr(float(true_w)), repr(lower),
                                 repr(upper), repr(lt), repr(ut), repr(tight)])
        print(f"mine: recall@{args.top} = {metrics['recall_at_k']:.4f}, "
              f"tight-bound fraction = {metrics['fraction_tight_90']:.4f}")
    print(f"mine: {report.total_entries} pair occurrences over {config.workers} workers; "
          f"results in {outdir}")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.fimi:
        source = FimiFileSource(args.fimi, args.dim)
        inputs = [args.fimi]
        upper_only = True
    elif args.a and args.b:
        source = TripleFileSource(args.a, args.b)
        inputs = [args.a, args.b]
        upper_only = False
    else:
        raise InputError("bench needs either --fimi or both --a and --b")
    worker_counts = [int(w) for w in args.workers_list.split(",") if w.strip()]
    if not worker_counts:
        raise ConfigError("empty --workers-list")

    stream = source()
    cpus = multiprocessing.cpu_count()
    rows = []
    for workers in worker_counts:
        config = EngineConfig(
            kappa=args.kappa,
            ss_capacity=args.ss_capacity,
            workers=workers,
            cs_enabled=not args.no_countsketch,
            instances=args.instances,
            seed=args.seed,
        )
        report = measure_loads(stream, config, upper_triangle_only=upper_only)
        t0 = time.perf_counter()
        run_parallel(source, config, upper_triangle_only=upper_only,
                     processes=min(workers, cpus))
        wall = time.perf_counter() - t0
        counts = report.worker_counts
        rows.append({
            "workers": workers,
            "wall_seconds": wall,
            "min_load": min(counts),
            "avg_load": report.expected_per_worker,
            "max_load": max(counts),
            "max_avg_ratio": report.max_avg_ratio(),
        })
        print(f"bench: K={workers:<3d} wall={wall:8.3f}s  avg={report.expected_per_worker:12.1f}  "
              f"max={max(counts):10d}  max/avg={report.max_avg_ratio():.4f}")

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_manifest(outdir, _manifest("bench", args, None, inputs,
                                      {"total": sum(r["wall_seconds"] for r in rows)},
                                      extra={"cpus": cpus, "rows": rows}))
    with open(outdir / "bench.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    return EXIT_OK


def cmd_generate(args) -> int:
    outdir = Path(args.out)
    if args.kind == "zipf-stream":
        model = ZipfModel(scale=args.scale, skew=args.skew, distinct=args.distinct)
        stream = gen_zipf_stream(model, args.n, args.outer_count, args.seed)
        truth = exact_product(stream)
        outdir.mkdir(parents=True, exist_ok=True)
        _write_manifest(outdir, _manifest("generate", args, None, [], {}, extra={
            "kind": "zipf-stream",
            "model": {"scale": args.scale, "skew": args.skew, "distinct": args.distinct},
            "n": args.n, "outer_count": args.outer_count, "seed": args.seed,
        }))
        write_triple_file(outdir / "a.triples", [a for a, _ in stream], args.n, args.n)
        write_triple_file(outdir / "b.triples", [b for _, b in stream], args.n, args.n)
        with open(outdir / "truth.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["row", "col", "weight"])
            for (row, col), weight in sorted(truth.items(), key=lambda kv: -kv[1]):
                writer.writerow([row, col, repr(weight)])
        print(f"generate: {len(stream)} outer products, {len(truth)} distinct entries "
              f"in {outdir}")
        return EXIT_OK

    transactions = gen_zipf_transactions(
        args.items, args.count, args.skew, args.seed, mean_size=args.mean_size
    )
    supports = exact_pair_supports(transactions)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_manifest(outdir, _manifest("generate", args, None, [], {}, extra={
        "kind": "transactions",
        "items": args.items, "count": args.count, "skew": args.skew,
        "mean_size": args.mean_size, "seed": args.seed,
        "pair_occurrences": sum(supports.values()),
        "distinct_pairs": len(supports),
    }))
    from .sparse import write_fimi

    write_fimi(outdir / "transactions.fimi", transactions)
    with open(outdir / "pair_supports.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["item_i", "item_j", "support"])
        for (i, j), support in sorted(supports.items(), key=lambda kv: (-kv[1], kv[0])):
            writer.writerow([i, j, support])
    print(f"generate: {len(transactions)} transactions, {len(supports)} distinct pairs "
          f"in {outdir}")
    return EXIT_OK


def _add_engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kappa", type=int, required=True, help="number of hash buckets")
    p.add_argument("--workers", type=int, default=_default_workers(),
                   help="worker intervals (default $CROP_WORKERS or 1)")
    p.add_argument("--ss-capacity", type=int, default=2,
                   help="records per Space-Saving summary")
    p.add_argument("--instances", type=int, default=1,
                   help="independent instances for median amplification (odd)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--no-countsketch", action="store_true",
                   help="disable the Count-Sketch estimator")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crop",
        description="Sketch the heaviest entries of a sparse matrix product "
                    "streamed as column-row outer products.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("multiply", help="sketch a product from two triple files")
    p.add_argument("--a", required=True, help="A as column-major triples")
    p.add_argument("--b", required=True, help="B as row-major triples")
    _add_engine_flags(p)
    p.add_argument("--top", type=int, default=100, help="entries in the report")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--binary-state", action="store_true",
                   help="store Count-Sketch cells as little-endian binary")
    p.set_defaults(func=cmd_multiply)

    p = sub.add_parser("mine", help="mine frequent pairs from a FIMI transaction file")
    p.add_argument("--fimi", required=True, help="transaction file")
    p.add_argument("--dim", type=int, default=None, help="item universe size")
    _add_engine_flags(p)
    p.add_argument("--top", type=int, default=100)
    p.add_argument("--out", required=True)
    p.add_argument("--binary-state", action="store_true")
    p.add_argument("--exact-oracle", action="store_true",
                   help="also count supports exactly and emit recall/ratio metrics")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("bench", help="load balance and scaling across worker counts")
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--fimi")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--kappa", type=int, required=True)
    p.add_argument("--ss-capacity", type=int, default=2)
    p.add_argument("--instances", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-countsketch", action="store_true")
    p.add_argument("--workers-list", default="1,2,4,8")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("generate", help="synthesize workloads with exact ground truth")
    kinds = p.add_subparsers(dest="kind", required=True)

    z = kinds.add_parser("zipf-stream", help="triple files realizing a Zipf entry law")
    z.add_argument("--n", type=int, required=True, help="matrix dimension")
    z.add_argument("--distinct", type=int, required=True, help="distinct output entries")
    z.add_argument("--scale", type=float, default=1000.0)
    z.add_argument("--skew", type=float, default=1.2)
    z.add_argument("--outer-count", type=int, default=None,
                   help="outer products (default: one per occupied row)")
    z.add_argument("--seed", type=int, default=0)
    z.add_argument("--out", required=True)
    z.set_defaults(func=cmd_generate)

    t = kinds.add_parser("transactions", help="FIMI file with Zipfian item popularity")
    t.add_argument("--items", type=int, required=True)
    t.add_argument("--count", type=int, required=True, help="number of transactions")
    t.add_argument("--skew", type=float, default=1.0)
    t.add_argument("--mean-size", type=int, default=10)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_generate)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InputError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
