"""Brute-force ground truth and synthetic workload generators.

Everything here is deliberately dumb and disjoint from the sketching code
paths (direct dictionaries, no bucket hashing) so that agreement tests mean
something. Work caps make accidental use at scale fail loudly instead of
thrashing. None of this belongs on a measured path.
"""

import itertools
import random
from collections import Counter
from dataclasses import dataclass

from .errors import ConfigError, ResourceCapError
from .sparse import OuterProductStream, SparseVector, write_fimi

DEFAULT_WORK_CAP = 10**8


def exact_product(
    stream: OuterProductStream,
    upper_only: bool = False,
    work_cap: int = DEFAULT_WORK_CAP,
) -> dict[tuple[int, int], float]:
    """Exact entry weights of the streamed product, by direct accumulation.

    Entries whose accumulated weight is exactly zero are dropped (they are not
    nonzero entries of the product). Refuses streams with more than `work_cap`
    elementary multiplications.
    """
    weights: dict[tuple[int, int], float] = {}
    work = 0
    for a, b in stream:
        work += a.nnz * b.nnz
        if work > work_cap:
            raise ResourceCapError(
                f"exact product needs more than {work_cap} operations; "
                "raise work_cap only if you mean it"
            )
        for i, av in zip(a.indices, a.values):
            for j, bv in zip(b.indices, b.values):
                if upper_only and i >= j:
                    continue
                key = (i, j)
                prev = weights.get(key)
                if prev is None:
                    weights[key] = av * bv
                else:
                    weights[key] = prev + av * bv
    return {k: w for k, w in weights.items() if w != 0.0}


def exact_top(weights: dict[tuple[int, int], float], k: int) -> list[tuple[tuple[int, int], float]]:
    """True top-k entries by weight; ties broken by (row, col) ascending."""
    if k < 0:
        raise ConfigError(f"k must be >= 0, got {k}")
    ranked = sorted(weights.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:k]


def exact_pair_supports(transactions, work_cap: int = DEFAULT_WORK_CAP) -> Counter:
    """Exact support of every unordered item pair, by direct counting."""
    supports: Counter = Counter()
    work = 0
    for items in transactions:
        s = len(items)
        work += s * (s - 1) // 2
        if work > work_cap:
            raise ResourceCapError(f"pair counting needs more than {work_cap} operations")
        supports.update(itertools.combinations(sorted(items), 2))
    return supports


@dataclass(frozen=True)
class ZipfModel:
    """Rank-weight law: the rank-r entry weighs scale / r**skew."""

    scale: float
    skew: float
    distinct: int

    def __post_init__(self):
        if self.scale <= 0:
            raise ConfigError(f"scale must be positive, got {self.scale}")
        if self.skew <= 0:
            raise ConfigError(f"skew must be positive, got {self.skew}")
        if self.distinct < 1:
            raise ConfigError(f"distinct must be >= 1, got {self.distinct}")

    def rank_weight(self, rank: int) -> float:
        return self.scale / rank**self.skew

    def weights(self) -> list[float]:
        return [self.rank_weight(r) for r in range(1, self.distinct + 1)]


def gen_zipf_stream(
    model: ZipfModel, dim: int, outer_count: int | None, seed: int
) -> OuterProductStream:
    """Synthesize a stream whose exact product realizes the Zipf law.

    The model's ranked weights are assigned to `distinct` uniformly-random
    distinct entries of [0, dim)^2. Each outer product covers exactly one
    output row (left side a single unit index, right side that row's column
    weights), so products never contaminate entries outside the chosen set;
    a row assigned c products splits its weights uniformly into c parts.
    outer_count == distinct degenerates to one product per entry; None means
    one product per occupied row.
    """
    d = model.distinct
    if d > dim * dim:
        raise ConfigError(f"cannot place {d} distinct entries in a {dim}x{dim} product")
    rng = random.Random(seed)
    cells = rng.sample(range(dim * dim), d)
    entries = [(c // dim, c % dim) for c in cells]
    ranked = model.weights()

    if outer_count == d:
        # degenerate mode: one rank-1 update per entry
        pairs = [
            (
                SparseVector(dim, [i], [1.0]),
                SparseVector(dim, [j], [w]),
            )
            for (i, j), w in zip(entries, ranked)
        ]
        return OuterProductStream.from_pairs(dim, dim, pairs)

    by_row: dict[int, list[tuple[int, float]]] = {}
    for (i, j), w in zip(entries, ranked):
        by_row.setdefault(i, []).append((j, w))
    rows = sorted(by_row)
    if outer_count is None:
        outer_count = len(rows)
    if outer_count < len(rows):
        raise ConfigError(
            f"outer_count={outer_count} infeasible: need at least one product "
            f"per occupied row ({len(rows)})"
        )
    copies = {row: 1 for row in rows}
    for extra in range(outer_count - len(rows)):
        copies[rows[extra % len(rows)]] += 1

    pairs = []
    for row in rows:
        c = copies[row]
        cols = sorted(by_row[row])
        unit = SparseVector(dim, [row], [1.0])
        part = SparseVector(dim, [j for j, _ in cols], [w / c for _, w in cols])
        pairs.extend((unit, part) for _ in range(c))
    return OuterProductStream.from_pairs(dim, dim, pairs)


def gen_zipf_transactions(
    item_count: int,
    tx_count: int,
    skew: float,
    seed: int,
    mean_size: int = 10,
    path=None,
) -> list[tuple[int, ...]]:
    """Draw transactions whose items follow a Zipfian popularity law.

    Pair supports come out roughly power-law distributed; nothing is promised
    about the exact tail — measure with exact_pair_supports. Writes a FIMI
    file when `path` is given.
    """
    if item_count < 1 or tx_count < 0 or mean_size < 1:
        raise ConfigError("item_count >= 1, tx_count >= 0, mean_size >= 1 required")
    if skew <= 0:
        raise ConfigError(f"skew must be positive, got {skew}")
    import numpy as np

    rng = np.random.default_rng(seed)
    probs = 1.0 / np.arange(1, item_count + 1, dtype=float) ** skew
    probs /= probs.sum()
    transactions = []
    for _ in range(tx_count):
        size = 2 + rng.poisson(max(mean_size - 2, 0))
        size = min(size, item_count)
        drawn = rng.choice(item_count, size=size, p=probs)
        transactions.append(tuple(sorted(set(int(x) for x in drawn))))
    if path is not None:
        write_fimi(path, transactions)
    return transactions
