"""Interval-restricted enumeration of outer-product entries.

Given one outer product a*b and a bucket interval [start, stop), produce
exactly the nonzero entries (i, j) whose bucket (row_hash(i) + col_hash(j))
mod kappa falls inside the interval, in expected time linear in the input
sizes plus the output size. The trick: sort each side's nonzero indices by
hash value; a pair lands in the interval iff the *sum* of the two hash values
lies in [start, stop) or [kappa+start, kappa+stop), and as we walk the left
side upward those two sum windows slide monotonically leftward over the right
side, so four cursors cover everything in one linear sweep.
"""

from dataclasses import dataclass

from .errors import ConfigError
from .hashing import IndexHashFn
from .sparse import Entry, SparseVector


@dataclass(frozen=True)
class WorkerAssignment:
    """Half-open bucket interval [start, stop) within [0, kappa) owned by one worker."""

    start: int
    stop: int
    kappa: int

    def __post_init__(self):
        if not 0 <= self.start <= self.stop <= self.kappa:
            raise ConfigError(
                f"invalid interval [{self.start}, {self.stop}) for kappa={self.kappa}"
            )

    def __len__(self) -> int:
        return self.stop - self.start

    @classmethod
    def split(cls, kappa: int, workers: int) -> list["WorkerAssignment"]:
        """Partition [0, kappa) into `workers` contiguous intervals, sizes within 1."""
        if not 1 <= workers <= kappa:
            raise ConfigError(f"workers must be in [1, kappa], got {workers} for kappa={kappa}")
        return [
            cls(c * kappa // workers, (c + 1) * kappa // workers, kappa)
            for c in range(workers)
        ]


class HashedIndexArray:
    """A vector's nonzero indices sorted ascending by hash value.

    Ties are broken by ascending original index, so the ordering (and hence
    everything downstream) is deterministic. Values ride along so enumeration
    can emit products without a lookup.
    """

    __slots__ = ("hashes", "indices", "values")

    def __init__(self, hashes: list[int], indices: list[int], values: list[float]):
        self.hashes = hashes
        self.indices = indices
        self.values = values

    def __len__(self) -> int:
        return len(self.hashes)

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.hashes, self.indices))


def bucket_sort_indices(
    v: SparseVector, index_hash: IndexHashFn, combined_nnz: int | None = None
) -> HashedIndexArray:
    """Sort v's nonzero indices by hash value, stably.

    Counting sort is used while kappa stays within 8x the combined input size
    (scratch must remain O(input)); beyond that a comparison sort wins.
    `combined_nnz` is |a|+|b| when sorting one side of an outer product;
    by default the vector's own size stands in twice.
    """
    n = v.nnz
    kappa = index_hash.kappa
    hashes = index_hash.values(v.indices)
    if combined_nnz is None:
        combined_nnz = 2 * n
    if n == 0:
        return HashedIndexArray([], [], [])
    if kappa <= 8 * combined_nnz:
        counts = [0] * (kappa + 1)
        for h in hashes:
            counts[h + 1] += 1
        for c in range(kappa):
            counts[c + 1] += counts[c]
        out_h = [0] * n
        out_i = [0] * n
        out_v = [0.0] * n
        # input indices are ascending, so placement order is stable
        for h, i, val in zip(hashes, v.indices, v.values):
            pos = counts[h]
            counts[h] = pos + 1
            out_h[pos] = h
            out_i[pos] = i
            out_v[pos] = val
        return HashedIndexArray(out_h, out_i, out_v)
    order = sorted(range(n), key=lambda p: (hashes[p], v.indices[p]))
    return HashedIndexArray(
        [hashes[p] for p in order],
        [v.indices[p] for p in order],
        [v.values[p] for p in order],
    )


@dataclass
class ScanStats:
    """Instrumented operation counts for the linear-time claim."""

    cursor_moves: int = 0
    element_checks: int = 0
    emitted: int = 0
    products: int = 0

    def total_ops(self) -> int:
        return self.cursor_moves + self.element_checks + self.emitted


def scan_sorted(
    left: HashedIndexArray,
    right: HashedIndexArray,
    assignment: WorkerAssignment,
    upper_only: bool = False,
    stats: ScanStats | None = None,
):
    """Yield (bucket, row, col, value) for every entry hashing into the interval.

    Both inputs must be sorted by hash under functions sharing the
    assignment's kappa. Emission order is (left position, right position)
    lexicographic, which is independent of the interval — that is what makes
    per-bucket update order identical no matter how [0, kappa) is carved up.
    With upper_only, pairs with row >= col are visited but not emitted.
    """
    start, stop, kappa = assignment.start, assignment.stop, assignment.kappa
    nb = len(right.hashes)
    moves = checks = emitted = 0
    try:
        if start == stop or not left.hashes or nb == 0:
            return
        bh = right.hashes
        bi = right.indices
        bv = right.values
        # four monotone cursors: [lo1, hi1) covers hash sums in [start, stop),
        # [lo2, hi2) covers sums in [kappa+start, kappa+stop)
        lo1 = hi1 = lo2 = hi2 = nb
        for ah, row, av in zip(left.hashes, left.indices, left.values):
            checks += 1
            bound = stop - ah
            while hi1 > 0 and bh[hi1 - 1] >= bound:
                hi1 -= 1
                moves += 1
            bound = start - ah
            while lo1 > 0 and bh[lo1 - 1] >= bound:
                lo1 -= 1
                moves += 1
            for p in range(lo1, hi1):
                col = bi[p]
                if upper_only and row >= col:
                    checks += 1
                    continue
                emitted += 1
                yield ah + bh[p], row, col, av * bv[p]
            bound = kappa + stop - ah
            while hi2 > 0 and bh[hi2 - 1] >= bound:
                hi2 -= 1
                moves += 1
            bound = kappa + start - ah
            while lo2 > 0 and bh[lo2 - 1] >= bound:
                lo2 -= 1
                moves += 1
            for p in range(lo2, hi2):
                col = bi[p]
                if upper_only and row >= col:
                    checks += 1
                    continue
                emitted += 1
                yield ah + bh[p] - kappa, row, col, av * bv[p]
    finally:
        if stats is not None:
            stats.cursor_moves += moves
            stats.element_checks += checks
            stats.emitted += emitted
            stats.products += 1


def count_sorted(
    left: HashedIndexArray,
    right: HashedIndexArray,
    assignment: WorkerAssignment,
    upper_only: bool = False,
) -> int:
    """Entry count for the interval without materializing anything.

    Without the upper-triangle filter this is O(|a| + |b|): each matched run
    contributes its length. With the filter the runs must be walked.
    """
    start, stop, kappa = assignment.start, assignment.stop, assignment.kappa
    nb = len(right.hashes)
    if start == stop or not left.hashes or nb == 0:
        return 0
    bh = right.hashes
    bi = right.indices
    total = 0
    lo1 = hi1 = lo2 = hi2 = nb
    for ah, row in zip(left.hashes, left.indices):
        bound = stop - ah
        while hi1 > 0 and bh[hi1 - 1] >= bound:
            hi1 -= 1
        bound = start - ah
        while lo1 > 0 and bh[lo1 - 1] >= bound:
            lo1 -= 1
        bound = kappa + stop - ah
        while hi2 > 0 and bh[hi2 - 1] >= bound:
            hi2 -= 1
        bound = kappa + start - ah
        while lo2 > 0 and bh[lo2 - 1] >= bound:
            lo2 -= 1
        if upper_only:
            for p in range(lo1, hi1):
                if row < bi[p]:
                    total += 1
            for p in range(lo2, hi2):
                if row < bi[p]:
                    total += 1
        else:
            total += (hi1 - lo1) + (hi2 - lo2)
    return total


def enumerate_interval(
    a: SparseVector,
    b: SparseVector,
    row_hash: IndexHashFn,
    col_hash: IndexHashFn,
    assignment: WorkerAssignment,
    stats: ScanStats | None = None,
):
    """Yield (Entry, value) for the outer product a*b restricted to the interval.

    Emits exactly { ((i, j), a(i)*b(j)) : a(i) != 0, b(j) != 0,
    (row_hash(i) + col_hash(j)) mod kappa in [start, stop) }, each once.
    """
    _check_kappa(row_hash, col_hash, assignment)
    combined = a.nnz + b.nnz
    left = bucket_sort_indices(a, row_hash, combined)
    right = bucket_sort_indices(b, col_hash, combined)
    for _, row, col, value in scan_sorted(left, right, assignment, stats=stats):
        yield Entry(row, col), value


def count_interval(
    a: SparseVector,
    b: SparseVector,
    row_hash: IndexHashFn,
    col_hash: IndexHashFn,
    assignment: WorkerAssignment,
) -> int:
    """Length of enumerate_interval's output, computed without yielding it."""
    _check_kappa(row_hash, col_hash, assignment)
    combined = a.nnz + b.nnz
    left = bucket_sort_indices(a, row_hash, combined)
    right = bucket_sort_indices(b, col_hash, combined)
    return count_sorted(left, right, assignment)


def _check_kappa(row_hash: IndexHashFn, col_hash: IndexHashFn, assignment: WorkerAssignment):
    if not (row_hash.kappa == col_hash.kappa == assignment.kappa):
        raise ConfigError(
            f"kappa mismatch: row {row_hash.kappa}, col {col_hash.kappa}, "
            f"interval {assignment.kappa}"
        )
