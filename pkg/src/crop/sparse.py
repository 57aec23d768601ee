"""Sparse vectors, outer-product streams, and the on-disk triple/FIMI formats.

A matrix product A*B is consumed as the stream of outer products a_k * b_k
(column k of A times row k of B). Nothing here ever materializes a dense
matrix; vectors hold only their nonzero entries.
"""

import logging
from typing import Callable, Iterable, Iterator, NamedTuple

from .errors import DimensionError, InputError, ParseError

logger = logging.getLogger(__name__)


class Entry(NamedTuple):
    """An output coordinate (row, col) of the matrix product."""

    row: int
    col: int


class SparseVector:
    """Immutable sparse vector: strictly increasing indices, nonzero values.

    Stored as parallel tuples so hot loops can iterate indices and values
    without allocating pair objects.
    """

    __slots__ = ("dim", "indices", "values")

    def __init__(self, dim: int, indices: Iterable[int], values: Iterable[float]):
        indices = tuple(indices)
        values = tuple(float(v) for v in values)
        if dim < 0:
            raise DimensionError(f"negative dimension {dim}")
        if len(indices) != len(values):
            raise InputError(
                f"{len(indices)} indices but {len(values)} values"
            )
        prev = -1
        for idx in indices:
            if idx <= prev:
                raise InputError(f"indices not strictly increasing at {idx}")
            prev = idx
        if prev >= dim:
            raise DimensionError(f"index {prev} out of range for dim {dim}")
        for v in values:
            if v == 0.0:
                raise InputError("stored values must be nonzero")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("SparseVector is immutable")

    @classmethod
    def from_pairs(cls, dim: int, pairs: Iterable[tuple[int, float]]) -> "SparseVector":
        pairs = sorted(pairs)
        return cls(dim, (i for i, _ in pairs), (v for _, v in pairs))

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def pairs(self) -> Iterator[tuple[int, float]]:
        return zip(self.indices, self.values)

    def get(self, index: int) -> float:
        """Value at `index`, 0.0 if not stored. Linear probe; test/oracle use only."""
        for i, v in zip(self.indices, self.values):
            if i == index:
                return v
        return 0.0

    def __reduce__(self):
        return (SparseVector, (self.dim, self.indices, self.values))

    def __eq__(self, other):
        return (
            isinstance(other, SparseVector)
            and self.dim == other.dim
            and self.indices == other.indices
            and self.values == other.values
        )

    def __hash__(self):
        return hash((self.dim, self.indices, self.values))

    def __repr__(self):
        return f"SparseVector(dim={self.dim}, nnz={self.nnz})"


def outer_product_nnz(a: SparseVector, b: SparseVector) -> int:
    """Number of nonzero entries in the outer product a*b: |a| * |b|."""
    return a.nnz * b.nnz


class OuterProductStream:
    """Re-iterable sequence of (column vector, row vector) pairs.

    Consumers take a single forward pass per iteration; calling iter() again
    opens a fresh pass (each worker "receives the broadcast input" anew).
    All left vectors share n_rows, all right vectors share n_cols.
    """

    __slots__ = ("n_rows", "n_cols", "length", "_factory", "zero_values_dropped")

    def __init__(
        self,
        n_rows: int,
        n_cols: int,
        length: int,
        factory: Callable[[], Iterable[tuple[SparseVector, SparseVector]]],
    ):
        self.n_rows = n_rows
        self.n_cols = n_cols
        self.length = length
        self._factory = factory
        self.zero_values_dropped = 0

    @classmethod
    def from_pairs(
        cls, n_rows: int, n_cols: int, pairs: Iterable[tuple[SparseVector, SparseVector]]
    ) -> "OuterProductStream":
        pairs = list(pairs)
        for a, b in pairs:
            if a.dim != n_rows:
                raise DimensionError(f"left vector dim {a.dim} != n_rows {n_rows}")
            if b.dim != n_cols:
                raise DimensionError(f"right vector dim {b.dim} != n_cols {n_cols}")
        return cls(n_rows, n_cols, len(pairs), lambda: iter(pairs))

    def __iter__(self) -> Iterator[tuple[SparseVector, SparseVector]]:
        return iter(self._factory())

    def __len__(self) -> int:
        return self.length

    def total_pair_count(self) -> int:
        """Sum of |a_k|*|b_k| over the stream (one extra pass)."""
        return sum(a.nnz * b.nnz for a, b in self)

    def __repr__(self):
        return (
            f"OuterProductStream({self.n_rows}x{self.n_cols}, "
            f"{self.length} outer products)"
        )


# --- triple files -----------------------------------------------------------
#
# UTF-8 text. First line: "n_rows n_cols kcount". Then one triple per line:
# for A (column-major) "k i v" with i a row index; for B (row-major) "k j v"
# with j a column index. Lines are sorted by k; k values without lines are
# empty vectors. Explicit zeros are dropped with a warning counter.


def _read_header(path, line: str, line_no: int) -> tuple[int, int, int]:
    parts = line.split()
    if len(parts) != 3:
        raise ParseError(path, line_no, f"expected 'n_rows n_cols kcount', got {line!r}")
    try:
        n_rows, n_cols, kcount = (int(p) for p in parts)
    except ValueError:
        raise ParseError(path, line_no, f"non-integer header field in {line!r}") from None
    if n_rows < 0 or n_cols < 0 or kcount < 0:
        raise ParseError(path, line_no, "header fields must be nonnegative")
    return n_rows, n_cols, kcount


def read_triple_file(path) -> tuple[int, int, list[list[tuple[int, float]]], int]:
    """Parse one side's triple file.

    Returns (header n_rows, header n_cols, per-k sorted (index, value) groups,
    zeros dropped). The caller interprets which header field bounds the
    indices (n_rows for an A file, n_cols for a B file).
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise ParseError(path, 1, "missing header line")
    n_rows, n_cols, kcount = _read_header(path, lines[0], 1)

    groups: list[list[tuple[int, float]]] = [[] for _ in range(kcount)]
    zeros_dropped = 0
    prev_k = -1
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(path, line_no, f"expected 'k index value', got {line!r}")
        try:
            k = int(parts[0])
            idx = int(parts[1])
            val = float(parts[2])
        except ValueError:
            raise ParseError(path, line_no, f"malformed triple {line!r}") from None
        if k < prev_k:
            raise ParseError(path, line_no, f"k values not sorted: {k} after {prev_k}")
        prev_k = k
        if not 0 <= k < kcount:
            raise ParseError(path, line_no, f"k={k} outside [0, {kcount})")
        if idx < 0:
            raise ParseError(path, line_no, f"negative index {idx}")
        if val != val:  # NaN
            raise ParseError(path, line_no, "NaN value")
        if val == 0.0:
            zeros_dropped += 1
            continue
        groups[k].append((idx, val))

    for k, group in enumerate(groups):
        group.sort()
        for (i1, _), (i2, _) in zip(group, group[1:]):
            if i1 == i2:
                raise ParseError(path, 0, f"duplicate index {i1} within k={k}")
    if zeros_dropped:
        logger.warning("%s: dropped %d explicit-zero triples", path, zeros_dropped)
    return n_rows, n_cols, groups, zeros_dropped


def load_column_row_streams(path_a, path_b) -> OuterProductStream:
    """Load A's columns and B's rows into one outer-product stream.

    Both files must carry identical headers; A's triples are row indices in
    [0, n_rows), B's are column indices in [0, n_cols).
    """
    ar, ac, a_groups, a_zeros = read_triple_file(path_a)
    br, bc, b_groups, b_zeros = read_triple_file(path_b)
    if len(a_groups) != len(b_groups):
        raise DimensionError(
            f"k-count mismatch: {path_a} has {len(a_groups)}, {path_b} has {len(b_groups)}"
        )
    if (ar, ac) != (br, bc):
        raise DimensionError(
            f"header mismatch: {path_a} says {ar}x{ac}, {path_b} says {br}x{bc}"
        )
    pairs = []
    for k, (ga, gb) in enumerate(zip(a_groups, b_groups)):
        try:
            a = SparseVector(ar, (i for i, _ in ga), (v for _, v in ga))
            b = SparseVector(bc, (j for j, _ in gb), (v for _, v in gb))
        except (InputError, DimensionError) as exc:
            raise DimensionError(f"k={k}: {exc}") from exc
        pairs.append((a, b))
    stream = OuterProductStream.from_pairs(ar, bc, pairs)
    stream.zero_values_dropped = a_zeros + b_zeros
    return stream


def write_triple_file(path, vectors: Iterable[SparseVector], n_rows: int, n_cols: int) -> None:
    """Write one side (A's columns or B's rows) in the triple format."""
    vectors = list(vectors)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{n_rows} {n_cols} {len(vectors)}\n")
        for k, vec in enumerate(vectors):
            for idx, val in vec.pairs():
                fh.write(f"{k} {idx} {val!r}\n")


# --- FIMI transaction files --------------------------------------------------


def read_fimi(path) -> list[tuple[int, ...]]:
    """Read a FIMI transaction file: one transaction per line, integer item ids.

    Items are deduplicated and sorted per transaction (transactions are sets);
    duplicates are logged. Blank lines are skipped.
    """
    transactions = []
    duplicates = 0
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                parts = line.split()
                if not parts:
                    continue
                try:
                    items = [int(p) for p in parts]
                except ValueError:
                    raise ParseError(path, line_no, f"non-integer item in {line.strip()!r}") from None
                for item in items:
                    if item < 0:
                        raise ParseError(path, line_no, f"negative item id {item}")
                unique = tuple(sorted(set(items)))
                duplicates += len(items) - len(unique)
                transactions.append(unique)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if duplicates:
        logger.warning("%s: dropped %d duplicate items within transactions", path, duplicates)
    return transactions


def write_fimi(path, transactions: Iterable[Iterable[int]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for items in transactions:
            fh.write(" ".join(str(i) for i in items))
            fh.write("\n")
