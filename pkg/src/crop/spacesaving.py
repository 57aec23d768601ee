"""Weighted Space-Saving summaries.

A summary tracks up to `capacity` items as (count, overestimation) records and
yields deterministic per-item bounds: true weight lies in
[count - overestimation, count] for recorded items. Total inserted weight
always equals the sum of counts, every overestimation is at most
total_weight / capacity, and any item whose true weight exceeds that ratio is
guaranteed to be present. Positive weights only.
"""

from .errors import ConfigError, InputError


class SpaceSavingSummary:
    """Counter summary with eviction of the minimum-count record.

    Eviction ties on count are broken toward the least-recently-updated
    record, so behaviour is a pure function of the update sequence.
    """

    __slots__ = ("capacity", "total_weight", "_records", "_ticks")

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.total_weight = 0.0
        # item -> [count, overestimation, last_update_tick]
        self._records: dict = {}
        self._ticks = 0

    def __len__(self) -> int:
        return len(self._records)

    @property
    def is_full(self) -> bool:
        return len(self._records) >= self.capacity

    def update(self, item, weight: float) -> None:
        """Add positive `weight` to `item`, evicting a minimum record if needed."""
        if weight <= 0:
            raise InputError(f"weights must be positive, got {weight}")
        self._ticks += 1
        self.total_weight += weight
        records = self._records
        rec = records.get(item)
        if rec is not None:
            rec[0] += weight
            rec[2] = self._ticks
        elif len(records) < self.capacity:
            records[item] = [weight, 0.0, self._ticks]
        else:
            # capacity is tiny at desk scale, so a linear min scan beats
            # maintaining an ordered structure
            min_item = None
            min_count = min_tick = 0.0
            for it, r in records.items():
                if min_item is None or r[0] < min_count or (r[0] == min_count and r[2] < min_tick):
                    min_item = it
                    min_count = r[0]
                    min_tick = r[2]
            del records[min_item]
            records[item] = [min_count + weight, min_count, self._ticks]

    def min_count(self) -> float:
        if not self._records:
            return 0.0
        return min(r[0] for r in self._records.values())

    def query(self, item) -> tuple[float, float]:
        """(lower, upper) weight bounds for `item`.

        Recorded: (count - overestimation, count). Absent: (0, min count) if
        the summary is full — the item may have been evicted — else (0, 0).
        """
        rec = self._records.get(item)
        if rec is not None:
            return rec[0] - rec[1], rec[0]
        if self.is_full:
            return 0.0, self.min_count()
        return 0.0, 0.0

    def records(self):
        """Iterate (item, count, overestimation) in insertion order."""
        for item, rec in self._records.items():
            yield item, rec[0], rec[1]

    def top(self, k: int) -> list[tuple]:
        """Up to k (item, lower, upper) records, best upper bound first.

        Ordered by count descending, then by ascending item (for entry tuples
        that is row then col).
        """
        if k < 0:
            raise ConfigError(f"k must be >= 0, got {k}")
        ranked = sorted(self._records.items(), key=lambda kv: (-kv[1][0], kv[0]))
        return [(item, rec[0] - rec[1], rec[0]) for item, rec in ranked[:k]]

    # --- text form for cross-process report aggregation ---

    def to_lines(self) -> list[str]:
        lines = [f"capacity {self.capacity}", f"total_weight {self.total_weight!r}"]
        for item, count, over in self.records():
            row, col = item
            lines.append(f"{row} {col} {count!r} {over!r}")
        return lines

    @classmethod
    def from_lines(cls, lines) -> "SpaceSavingSummary":
        lines = list(lines)
        if len(lines) < 2 or not lines[0].startswith("capacity "):
            raise InputError("malformed summary: missing capacity header")
        summary = cls(int(lines[0].split()[1]))
        summary.total_weight = float(lines[1].split()[1])
        for ln in lines[2:]:
            parts = ln.split()
            if len(parts) != 4:
                raise InputError(f"malformed summary record {ln!r}")
            row, col = int(parts[0]), int(parts[1])
            summary._ticks += 1
            summary._records[(row, col)] = [float(parts[2]), float(parts[3]), summary._ticks]
        if len(summary._records) > summary.capacity:
            raise InputError("summary holds more records than its capacity")
        return summary

    def __repr__(self):
        return (
            f"SpaceSavingSummary(capacity={self.capacity}, items={len(self)}, "
            f"total_weight={self.total_weight})"
        )
