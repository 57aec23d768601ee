"""Frequent pair mining over transaction streams.

Each transaction is a 0/1 sparse vector v; the pairs it contains are the
above-diagonal nonzero entries of v * v^T, each contributing weight 1 per
containing transaction, so a pair's support is exactly its entry weight in
the summed self-join product. The engine applies the row < col filter inside
enumeration — diagonal and lower-triangle entries are never counted as load.
"""

from .engine import EngineConfig, LoadReport, SketchState, run
from .errors import ConfigError, InputError
from .sparse import OuterProductStream, SparseVector, read_fimi


def transaction_to_outer(items, dim: int) -> tuple[SparseVector, SparseVector]:
    """The 0/1 vector of a transaction, as both sides of its self outer product.

    One SparseVector object is shared by both sides, so hashing work per side
    happens once per item.
    """
    vec = SparseVector(dim, items, [1.0] * len(items))
    return vec, vec


def transactions_to_stream(transactions, dim: int | None = None) -> OuterProductStream:
    """Materialize transactions as a self-join outer-product stream.

    `dim` defaults to max item id + 1; items at or beyond a given dim are an
    error (the universe is fixed up front).
    """
    transactions = [tuple(t) for t in transactions]
    max_item = max((t[-1] for t in transactions if t), default=-1)
    if dim is None:
        dim = max_item + 1
    elif max_item >= dim:
        raise InputError(f"item id {max_item} outside configured universe [0, {dim})")
    pairs = [transaction_to_outer(t, dim) for t in transactions]
    return OuterProductStream.from_pairs(dim, dim, pairs)


class FimiFileSource:
    """Picklable stream source over a FIMI transaction file."""

    def __init__(self, path, dim: int | None = None):
        self.path = str(path)
        self.dim = dim

    def __call__(self) -> OuterProductStream:
        return transactions_to_stream(read_fimi(self.path), self.dim)


def mine(
    path,
    config: EngineConfig,
    dim: int | None = None,
    record_per_product: bool = False,
) -> tuple[SketchState, LoadReport]:
    """Run the engine over a FIMI file's transactions with the pair filter on."""
    stream = transactions_to_stream(read_fimi(path), dim)
    return run(
        stream,
        config,
        upper_triangle_only=True,
        record_per_product=record_per_product,
    )


def recall_at_k(state: SketchState, oracle_topk, k: int) -> float:
    """Fraction of the true top-k pairs present in the reported top-k."""
    if k < 0:
        raise ConfigError(f"k must be >= 0, got {k}")
    if len(oracle_topk) < k:
        raise InputError(f"oracle list has {len(oracle_topk)} pairs, need {k}")
    if k == 0:
        return 0.0
    truth = {tuple(p) for p in oracle_topk[:k]}
    reported = {tuple(t.entry) for t in state.top_entries(k)}
    return len(reported & truth) / k


class BoundRatioRow(tuple):
    """(entry, true, lower, upper, lower/true, upper/true, lower/upper)."""

    __slots__ = ()


def bound_ratio_report(state: SketchState, exact_counts: dict, k: int):
    """Bound quality for the true top-k pairs.

    Returns (rows, fraction) where each row is a BoundRatioRow for one true
    top-k pair and `fraction` is the share of them with lower/upper >= 0.9.
    """
    if k < 0:
        raise ConfigError(f"k must be >= 0, got {k}")
    ranked = sorted(exact_counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    rows = []
    good = 0
    for entry, true_weight in ranked:
        lower, upper, _ = state.query(entry)
        tightness = lower / upper if upper > 0 else 0.0
        if tightness >= 0.9:
            good += 1
        rows.append(
            BoundRatioRow(
                (entry, true_weight, lower, upper,
                 lower / true_weight, upper / true_weight, tightness)
            )
        )
    fraction = good / len(rows) if rows else 0.0
    return rows, fraction
