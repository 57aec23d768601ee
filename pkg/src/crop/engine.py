"""The partitioned sketch engine.

[0, kappa) is split into `workers` contiguous equal intervals. Each worker
scans the whole outer-product stream and applies every entry hashing into its
interval to that bucket's Space-Saving summary (and Count-Sketch cell). An
entry's bucket depends only on (row, col) and the hash seed, never on which
outer product or worker sees it, so the merged final state is bit-identical
for every worker count — partitioning is purely a parallelization choice.

Estimation accuracy is amplified by `instances` (odd t) fully independent
engines, each with its own hash draw and its own partition of [0, kappa).
Space-Saving accepts only positive weights, so streams producing negative
entry values are rejected mid-run; Count-Sketch itself is fine with them.

Two-phase contract: build (run), then freeze, then query. Per-worker partial
states can be serialized and merged across processes; merging is the single
post-processing communication step.
"""

import json
import multiprocessing
from base64 import b64decode, b64encode
from dataclasses import dataclass, field
from statistics import median
from typing import NamedTuple

from .countsketch import CountSketch
from .errors import ConfigError, CropError, DimensionError, InputError
from .hashing import MAX_INDEX, EntryHasher, HashConfig, derive_seed, hasher_from_text, hasher_to_text, make_hashes
from .interval import WorkerAssignment, bucket_sort_indices, count_sorted, scan_sorted
from .sparse import Entry, OuterProductStream
from .spacesaving import SpaceSavingSummary

STATE_FORMAT = "crop-state/1"
PARTIAL_FORMAT = "crop-partial/1"


@dataclass(frozen=True)
class EngineConfig:
    """Knobs for one engine run."""

    kappa: int
    ss_capacity: int
    workers: int = 1
    cs_enabled: bool = True
    instances: int = 1
    seed: int = 0
    d_hint: int | None = None

    def __post_init__(self):
        if self.kappa < 1:
            raise ConfigError(f"kappa must be >= 1, got {self.kappa}")
        if self.ss_capacity < 1:
            raise ConfigError(f"ss_capacity must be >= 1, got {self.ss_capacity}")
        if not 1 <= self.workers <= self.kappa:
            raise ConfigError(
                f"workers must be in [1, kappa={self.kappa}], got {self.workers}"
            )
        if self.instances < 1 or self.instances % 2 == 0:
            raise ConfigError(f"instances must be odd and >= 1, got {self.instances}")
        if self.d_hint is not None and self.d_hint < 0:
            raise ConfigError(f"d_hint must be >= 0, got {self.d_hint}")

    def instance_seeds(self) -> list[int]:
        return [derive_seed(self.seed, f"instance:{i}") for i in range(self.instances)]

    def assignments(self) -> list[WorkerAssignment]:
        return WorkerAssignment.split(self.kappa, self.workers)

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "ss_capacity": self.ss_capacity,
            "workers": self.workers,
            "cs_enabled": self.cs_enabled,
            "instances": self.instances,
            "seed": self.seed,
            "d_hint": self.d_hint,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EngineConfig":
        return cls(**data)


class InstanceSketch:
    """One independent instance: a hash draw plus its bucket structures."""

    __slots__ = ("seed", "hasher", "summaries", "sketch")

    def __init__(self, seed: int, hasher: EntryHasher, summaries: dict, sketch: CountSketch | None):
        self.seed = seed
        self.hasher = hasher
        self.summaries = summaries  # bucket -> SpaceSavingSummary, created on first touch
        self.sketch = sketch

    def recorded_weight(self) -> float:
        return sum(s.total_weight for s in self.summaries.values())


class TopEntry(NamedTuple):
    entry: Entry
    lower: float
    upper: float
    estimate: float | None


class SketchState:
    """Frozen query surface over all instances' bucket structures."""

    def __init__(self, config: EngineConfig, n_rows: int, n_cols: int,
                 instances: list[InstanceSketch], upper_triangle_only: bool):
        self.config = config
        self.n_rows = n_rows
        self.n_cols = n_cols
        self.instances = instances
        self.upper_triangle_only = upper_triangle_only
        self.frozen = False

    def _require_frozen(self):
        if not self.frozen:
            raise CropError("state is still building; queries require a frozen state")

    def query(self, entry) -> tuple[float, float, float | None]:
        """(lower, upper, cs_estimate) for one entry.

        Bounds are intersected across instances — every instance's bounds
        sandwich the same true weight, so max-of-lowers / min-of-uppers is
        both valid and tightest. The estimate is the median of the per-
        instance Count-Sketch queries (None when disabled).
        """
        self._require_frozen()
        row, col = entry
        lower = 0.0
        upper = float("inf")
        for inst in self.instances:
            bucket = inst.hasher.bucket_of(row, col)
            summary = inst.summaries.get(bucket)
            if summary is None:
                lo, up = 0.0, 0.0
            else:
                lo, up = summary.query((row, col))
            if lo > lower:
                lower = lo
            if up < upper:
                upper = up
        estimate = None
        if self.config.cs_enabled:
            estimate = median(inst.sketch.query(row, col) for inst in self.instances)
        return lower, upper, estimate

    def candidate_entries(self) -> list[tuple[int, int]]:
        """Entries recorded in a majority (>= ceil(t/2)) of instances' summaries."""
        need = len(self.instances) // 2 + 1
        hits: dict = {}
        for inst in self.instances:
            for summary in inst.summaries.values():
                for item, _, _ in summary.records():
                    hits[item] = hits.get(item, 0) + 1
        return [item for item, count in hits.items() if count >= need]

    def top_entries(self, k: int) -> list[TopEntry]:
        """Best k candidates ranked by upper bound, then lower, then position."""
        self._require_frozen()
        if k < 0:
            raise ConfigError(f"k must be >= 0, got {k}")
        scored = []
        for item in self.candidate_entries():
            lower, upper, estimate = self.query(item)
            scored.append(TopEntry(Entry(*item), lower, upper, estimate))
        scored.sort(key=lambda t: (-t.upper, -t.lower, t.entry.row, t.entry.col))
        return scored[:k]

    def recorded_weight(self) -> float:
        """Summed bucket weights of instance 0 (equals the processed stream weight)."""
        return self.instances[0].recorded_weight()


@dataclass
class LoadReport:
    """Per-worker processed-entry accounting.

    `rows` holds one list of per-worker counts per instance; every entry of
    the stream is processed exactly once per instance, so each row sums to
    the same stream total.
    """

    kappa: int
    workers: int
    rows: list[list[int]]
    input_pair_total: int
    per_product: list[tuple[int, int, list[int]]] | None = None
    assignments: list[tuple[int, int]] = field(default_factory=list)

    @property
    def worker_counts(self) -> list[int]:
        return self.rows[0]

    @property
    def total_entries(self) -> int:
        return sum(self.rows[0])

    @property
    def expected_per_worker(self) -> float:
        return self.total_entries / self.workers

    def max_avg_ratio(self) -> float:
        """Worst max/avg worker load across instances (1.0 when idle)."""
        worst = 1.0
        for row in self.rows:
            total = sum(row)
            if total == 0:
                continue
            avg = total / len(row)
            worst = max(worst, max(row) / avg)
        return worst


@dataclass(frozen=True)
class BalanceCheck:
    violations: int
    checked: int
    bound: float | None

    @property
    def frequency(self) -> float:
        return self.violations / self.checked if self.checked else 0.0


def _check_stream(stream: OuterProductStream):
    if stream.n_rows > MAX_INDEX or stream.n_cols > MAX_INDEX:
        raise DimensionError(
            f"dimensions {stream.n_rows}x{stream.n_cols} exceed the supported "
            f"index space ({MAX_INDEX})"
        )


def run(
    stream: OuterProductStream,
    config: EngineConfig,
    upper_triangle_only: bool = False,
    record_per_product: bool = False,
) -> tuple[SketchState, LoadReport]:
    """Process the whole stream through all instances and workers, in process.

    The single pass per instance fans each outer product out to every worker
    interval; observable state is identical to workers running separately.
    """
    _check_stream(stream)
    if record_per_product and config.instances != 1:
        raise ConfigError("per-product load recording requires instances == 1")
    assignments = config.assignments()
    instances: list[InstanceSketch] = []
    rows: list[list[int]] = []
    per_product: list[tuple[int, int, list[int]]] | None = [] if record_per_product else None
    input_pair_total = 0
    for index, seed in enumerate(config.instance_seeds()):
        hasher = make_hashes(HashConfig(config.kappa, seed))
        summaries: dict = {}
        sketch = CountSketch(hasher) if config.cs_enabled else None
        cells = sketch.cells if sketch is not None else None
        sign = hasher.sign_hash
        capacity = config.ss_capacity
        counts = [0] * config.workers
        pair_total = 0
        for a, b in stream:
            pair_total += a.nnz * b.nnz
            combined = a.nnz + b.nnz
            left = bucket_sort_indices(a, hasher.row_hash, combined)
            right = bucket_sort_indices(b, hasher.col_hash, combined)
            product_counts = [0] * config.workers if per_product is not None else None
            for w, assignment in enumerate(assignments):
                n = 0
                for bucket, row, col, value in scan_sorted(
                    left, right, assignment, upper_triangle_only
                ):
                    summary = summaries.get(bucket)
                    if summary is None:
                        summary = summaries[bucket] = SpaceSavingSummary(capacity)
                    summary.update((row, col), value)
                    if cells is not None:
                        cells[bucket] += value * sign(row, col)
                    n += 1
                counts[w] += n
                if product_counts is not None:
                    product_counts[w] = n
            if per_product is not None and index == 0:
                per_product.append((a.nnz, b.nnz, product_counts))
        instances.append(InstanceSketch(seed, hasher, summaries, sketch))
        rows.append(counts)
        input_pair_total = pair_total
    state = SketchState(config, stream.n_rows, stream.n_cols, instances, upper_triangle_only)
    state.frozen = True
    report = LoadReport(
        kappa=config.kappa,
        workers=config.workers,
        rows=rows,
        input_pair_total=input_pair_total,
        per_product=per_product,
        assignments=[(a.start, a.stop) for a in assignments],
    )
    return state, report


def measure_loads(
    stream: OuterProductStream,
    config: EngineConfig,
    upper_triangle_only: bool = False,
    record_per_product: bool = False,
) -> LoadReport:
    """Per-worker entry counts without building any sketches.

    Counting a sorted pair of hash arrays is linear in the input, so this is
    the cheap way to study load balance at scale. Numbers match run() exactly.
    """
    _check_stream(stream)
    if record_per_product and config.instances != 1:
        raise ConfigError("per-product load recording requires instances == 1")
    assignments = config.assignments()
    rows = []
    per_product: list[tuple[int, int, list[int]]] | None = [] if record_per_product else None
    input_pair_total = 0
    for index, seed in enumerate(config.instance_seeds()):
        hasher = make_hashes(HashConfig(config.kappa, seed))
        counts = [0] * config.workers
        pair_total = 0
        for a, b in stream:
            pair_total += a.nnz * b.nnz
            combined = a.nnz + b.nnz
            left = bucket_sort_indices(a, hasher.row_hash, combined)
            right = bucket_sort_indices(b, hasher.col_hash, combined)
            product_counts = [0] * config.workers if per_product is not None else None
            for w, assignment in enumerate(assignments):
                n = count_sorted(left, right, assignment, upper_triangle_only)
                counts[w] += n
                if product_counts is not None:
                    product_counts[w] = n
            if per_product is not None and index == 0:
                per_product.append((a.nnz, b.nnz, product_counts))
        rows.append(counts)
        input_pair_total = pair_total
    return LoadReport(
        kappa=config.kappa,
        workers=config.workers,
        rows=rows,
        input_pair_total=input_pair_total,
        per_product=per_product,
        assignments=[(a.start, a.stop) for a in assignments],
    )


def load_balance_check(report: LoadReport, deviation: float) -> BalanceCheck:
    """Count load-balance violations at relative deviation `deviation`.

    Per-product mode (when the report recorded per-product counts): a product
    with realized total T and expected per-worker load W = T / workers is a
    violation if any worker strayed beyond deviation * W; products with
    W < (|a|+|b|) / deviation^2 are excluded (the guarantee presumes enough
    entries per worker). Returns the mean of the per-product 1/(|a|+|b|)
    reference bounds. Whole-run mode checks each instance's aggregate loads
    and carries no reference bound.
    """
    if deviation <= 0:
        raise ConfigError(f"deviation must be positive, got {deviation}")
    if report.per_product is not None:
        violations = checked = 0
        bound_sum = 0.0
        for nnz_a, nnz_b, counts in report.per_product:
            total = sum(counts)
            if total == 0:
                continue
            expected = total / report.workers
            if expected < (nnz_a + nnz_b) / deviation**2:
                continue
            checked += 1
            bound_sum += 1.0 / (nnz_a + nnz_b)
            if any(abs(x - expected) > deviation * expected for x in counts):
                violations += 1
        bound = bound_sum / checked if checked else None
        return BalanceCheck(violations, checked, bound)
    violations = checked = 0
    for row in report.rows:
        total = sum(row)
        if total == 0:
            continue
        checked += 1
        expected = total / len(row)
        if any(abs(x - expected) > deviation * expected for x in row):
            violations += 1
    return BalanceCheck(violations, checked, None)


# --- per-worker partial states and merging ------------------------------------


def run_worker(
    stream: OuterProductStream,
    config: EngineConfig,
    worker: int,
    upper_triangle_only: bool = False,
) -> dict:
    """Run one worker's interval over the full stream for all instances.

    Returns a plain-data payload (JSON-serializable) carrying the worker's
    bucket structures, suitable for save_partial / merge_partials.
    """
    _check_stream(stream)
    assignments = config.assignments()
    if not 0 <= worker < config.workers:
        raise ConfigError(f"worker index {worker} out of range for {config.workers}")
    assignment = assignments[worker]
    instance_payloads = []
    for seed in config.instance_seeds():
        hasher = make_hashes(HashConfig(config.kappa, seed))
        summaries: dict = {}
        cells = [0.0] * (assignment.stop - assignment.start) if config.cs_enabled else None
        sign = hasher.sign_hash
        capacity = config.ss_capacity
        count = 0
        for a, b in stream:
            combined = a.nnz + b.nnz
            left = bucket_sort_indices(a, hasher.row_hash, combined)
            right = bucket_sort_indices(b, hasher.col_hash, combined)
            for bucket, row, col, value in scan_sorted(
                left, right, assignment, upper_triangle_only
            ):
                summary = summaries.get(bucket)
                if summary is None:
                    summary = summaries[bucket] = SpaceSavingSummary(capacity)
                summary.update((row, col), value)
                if cells is not None:
                    cells[bucket - assignment.start] += value * sign(row, col)
                count += 1
        instance_payloads.append(
            {
                "seed": seed,
                "hashes": hasher_to_text(hasher, seed),
                "count": count,
                "summaries": [
                    [bucket, summaries[bucket].to_lines()] for bucket in sorted(summaries)
                ],
                "cs_cells": cells,
            }
        )
    return {
        "format": PARTIAL_FORMAT,
        "worker": worker,
        "start": assignment.start,
        "stop": assignment.stop,
        "n_rows": stream.n_rows,
        "n_cols": stream.n_cols,
        "upper_triangle_only": upper_triangle_only,
        "config": config.to_dict(),
        "instances": instance_payloads,
    }


def save_partial(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_partial(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != PARTIAL_FORMAT:
        raise InputError(f"{path}: not a {PARTIAL_FORMAT} file")
    return payload


def merge_partials(payloads: list[dict]) -> tuple[SketchState, LoadReport]:
    """Concatenate disjoint worker payloads into one frozen queryable state.

    Validates that the payloads share a config, carry identical hash
    descriptions per instance, and exactly cover [0, kappa).
    """
    if not payloads:
        raise InputError("no partial states to merge")
    payloads = sorted(payloads, key=lambda p: p["start"])
    head = payloads[0]
    config = EngineConfig.from_dict(head["config"])
    if len(payloads) != config.workers:
        raise InputError(
            f"expected {config.workers} worker payloads, got {len(payloads)}"
        )
    cursor = 0
    for p in payloads:
        if p["config"] != head["config"]:
            raise InputError("worker payloads disagree on the engine config")
        if (p["n_rows"], p["n_cols"]) != (head["n_rows"], head["n_cols"]):
            raise InputError("worker payloads disagree on stream dimensions")
        if p["upper_triangle_only"] != head["upper_triangle_only"]:
            raise InputError("worker payloads disagree on the triangle filter")
        if p["start"] != cursor:
            raise InputError(
                f"intervals do not tile [0, kappa): gap or overlap at bucket {cursor}"
            )
        cursor = p["stop"]
    if cursor != config.kappa:
        raise InputError(f"intervals stop at {cursor}, expected kappa={config.kappa}")

    instances = []
    rows = [[0] * config.workers for _ in range(config.instances)]
    for i in range(config.instances):
        hash_text = head["instances"][i]["hashes"]
        hasher = hasher_from_text(hash_text)
        summaries: dict = {}
        cells = [0.0] * config.kappa if config.cs_enabled else None
        for p in payloads:
            inst = p["instances"][i]
            if inst["hashes"] != hash_text:
                raise InputError("worker payloads disagree on hash descriptions")
            for bucket, lines in inst["summaries"]:
                if not p["start"] <= bucket < p["stop"]:
                    raise InputError(f"bucket {bucket} outside worker interval")
                summaries[bucket] = SpaceSavingSummary.from_lines(lines)
            if cells is not None:
                part = inst["cs_cells"]
                cells[p["start"]:p["stop"]] = part
            rows[i][p["worker"]] = inst["count"]
        sketch = CountSketch(hasher, cells) if cells is not None else None
        instances.append(InstanceSketch(head["instances"][i]["seed"], hasher, summaries, sketch))
    state = SketchState(
        config, head["n_rows"], head["n_cols"], instances, head["upper_triangle_only"]
    )
    state.frozen = True
    report = LoadReport(
        kappa=config.kappa,
        workers=config.workers,
        rows=rows,
        input_pair_total=0,
        assignments=[(p["start"], p["stop"]) for p in payloads],
    )
    return state, report


# --- parallel execution --------------------------------------------------------


class MemorySource:
    """Picklable stream source for in-memory pairs."""

    def __init__(self, stream: OuterProductStream):
        self.n_rows = stream.n_rows
        self.n_cols = stream.n_cols
        self.pairs = list(stream)

    def __call__(self) -> OuterProductStream:
        return OuterProductStream.from_pairs(self.n_rows, self.n_cols, self.pairs)


class TripleFileSource:
    """Stream source that re-reads a pair of triple files."""

    def __init__(self, path_a, path_b):
        self.path_a = str(path_a)
        self.path_b = str(path_b)

    def __call__(self) -> OuterProductStream:
        from .sparse import load_column_row_streams

        return load_column_row_streams(self.path_a, self.path_b)


def _parallel_task(args):
    source, config, worker, upper = args
    return run_worker(source(), config, worker, upper)


def run_parallel(
    source,
    config: EngineConfig,
    upper_triangle_only: bool = False,
    processes: int | None = None,
) -> tuple[SketchState, LoadReport]:
    """Shared-nothing execution: one OS process per worker, merged at the end.

    `source` is a zero-argument picklable callable returning a fresh stream
    (each process re-receives the broadcast input); a plain stream is wrapped
    in a MemorySource automatically.
    """
    if isinstance(source, OuterProductStream):
        source = MemorySource(source)
    tasks = [(source, config, w, upper_triangle_only) for w in range(config.workers)]
    if processes is None:
        processes = min(config.workers, multiprocessing.cpu_count())
    if processes <= 1 or config.workers == 1:
        payloads = [_parallel_task(t) for t in tasks]
    else:
        with multiprocessing.Pool(processes) as pool:
            payloads = pool.map(_parallel_task, tasks)
    return merge_partials(payloads)


# --- whole-state serialization ---------------------------------------------------


def save_state(path, state: SketchState, binary_cs: bool = False) -> None:
    """Write a merged state as one JSON document.

    Count-Sketch cells are stored as a float list, or little-endian binary
    (base64) when binary_cs is set.
    """
    instances = []
    for inst in state.instances:
        cs_field = None
        if inst.sketch is not None:
            if binary_cs:
                cs_field = {"encoding": "base64-le", "data": b64encode(inst.sketch.to_bytes()).decode()}
            else:
                cs_field = {"encoding": "list", "data": inst.sketch.cells}
        instances.append(
            {
                "seed": inst.seed,
                "hashes": hasher_to_text(inst.hasher, inst.seed),
                "summaries": [
                    [bucket, inst.summaries[bucket].to_lines()]
                    for bucket in sorted(inst.summaries)
                ],
                "cs": cs_field,
            }
        )
    doc = {
        "format": STATE_FORMAT,
        "config": state.config.to_dict(),
        "n_rows": state.n_rows,
        "n_cols": state.n_cols,
        "upper_triangle_only": state.upper_triangle_only,
        "instances": instances,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_state(path) -> SketchState:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != STATE_FORMAT:
        raise InputError(f"{path}: not a {STATE_FORMAT} file")
    config = EngineConfig.from_dict(doc["config"])
    instances = []
    for inst_doc in doc["instances"]:
        hasher = hasher_from_text(inst_doc["hashes"])
        summaries = {
            bucket: SpaceSavingSummary.from_lines(lines)
            for bucket, lines in inst_doc["summaries"]
        }
        sketch = None
        cs_field = inst_doc.get("cs")
        if cs_field is not None:
            if cs_field["encoding"] == "base64-le":
                sketch = CountSketch.from_bytes(hasher, b64decode(cs_field["data"]))
            else:
                sketch = CountSketch(hasher, [float(x) for x in cs_field["data"]])
        instances.append(InstanceSketch(inst_doc["seed"], hasher, summaries, sketch))
    state = SketchState(
        config, doc["n_rows"], doc["n_cols"], instances, doc["upper_triangle_only"]
    )
    state.frozen = True
    return state
