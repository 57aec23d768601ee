"""Count-Sketch accumulators over the bucket space.

One sketch holds kappa signed accumulator cells addressed by the shared entry
hash; querying an entry returns cell * sign, an unbiased estimate of its
weight. Accuracy is amplified by taking the median over t independent
instances (odd t).
"""

import struct
from statistics import median

from .errors import ConfigError, InputError
from .hashing import EntryHasher


class CountSketch:
    """kappa signed accumulators sharing the engine's entry hash."""

    __slots__ = ("hasher", "cells")

    def __init__(self, hasher: EntryHasher, cells: list[float] | None = None):
        self.hasher = hasher
        if cells is None:
            cells = [0.0] * hasher.kappa
        elif len(cells) != hasher.kappa:
            raise ConfigError(f"expected {hasher.kappa} cells, got {len(cells)}")
        self.cells = cells

    @property
    def kappa(self) -> int:
        return self.hasher.kappa

    def update(self, row: int, col: int, value: float, bucket: int | None = None) -> None:
        """Add value * sign(row, col) to the entry's cell.

        `bucket` may be supplied when the caller has already computed the
        entry hash (it must equal it); otherwise it is derived here.
        """
        if bucket is None:
            bucket = self.hasher.bucket_of(row, col)
        self.cells[bucket] += value * self.hasher.sign_hash(row, col)

    def query(self, row: int, col: int) -> float:
        """Unbiased weight estimate: cell[bucket(e)] * sign(e)."""
        return self.cells[self.hasher.bucket_of(row, col)] * self.hasher.sign_hash(row, col)

    # --- serialization: text (one float per line) or little-endian binary ---

    def to_text(self) -> str:
        return "\n".join(repr(c) for c in self.cells) + "\n"

    @classmethod
    def from_text(cls, hasher: EntryHasher, text: str) -> "CountSketch":
        cells = [float(ln) for ln in text.splitlines() if ln.strip()]
        return cls(hasher, cells)

    def to_bytes(self) -> bytes:
        return struct.pack(f"<{len(self.cells)}d", *self.cells)

    @classmethod
    def from_bytes(cls, hasher: EntryHasher, blob: bytes) -> "CountSketch":
        count = len(blob) // 8
        if count * 8 != len(blob):
            raise InputError(f"binary sketch length {len(blob)} is not a multiple of 8")
        return cls(hasher, list(struct.unpack(f"<{count}d", blob)))

    def __repr__(self):
        return f"CountSketch(kappa={self.kappa})"


class MedianEstimator:
    """Median over t independent Count-Sketch instances (t odd)."""

    __slots__ = ("sketches",)

    def __init__(self, sketches: list[CountSketch]):
        if not sketches:
            raise ConfigError("need at least one sketch instance")
        if len(sketches) % 2 == 0:
            raise ConfigError(f"instance count must be odd, got {len(sketches)}")
        self.sketches = list(sketches)

    @property
    def instances(self) -> int:
        return len(self.sketches)

    def query(self, row: int, col: int) -> float:
        return median(s.query(row, col) for s in self.sketches)


def median_query(estimator: MedianEstimator, entry) -> float:
    row, col = entry
    return estimator.query(row, col)
