"""Pairwise-independent hashing of output entries.

The entry hash is deliberately structured: bucket(i, j) = (row_hash(i) +
col_hash(j)) mod kappa, with each side a degree-1 polynomial modulo the
Mersenne prime 2^61-1 reduced into [0, kappa). The additive structure is what
lets a worker enumerate exactly the entries of an outer product that land in
its bucket interval without touching the rest (see crop.interval); user code
therefore only ever receives the two sides, never a fused opaque h.

The sign hash used by Count-Sketch maps a whole entry (i, j) to +/-1 via an
independent polynomial over the packed key (i << 32) | j.
"""

import hashlib
import random
from dataclasses import dataclass
from typing import NamedTuple

from .errors import ConfigError, InputError

MERSENNE_PRIME = (1 << 61) - 1

# Packing (row << 32) | col must be injective.
MAX_INDEX = 1 << 32


def derive_seed(master: int, label: str) -> int:
    """Stable fixed-label seed splitting: one master seed drives everything."""
    digest = hashlib.blake2b(f"{master}:{label}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


@dataclass(frozen=True)
class HashConfig:
    """Parameters for drawing one (row, col, sign) hash triple."""

    kappa: int
    seed: int
    prime: int = MERSENNE_PRIME

    def __post_init__(self):
        if self.kappa < 1:
            raise ConfigError(f"kappa must be >= 1, got {self.kappa}")
        if self.prime <= self.kappa:
            raise ConfigError(f"prime {self.prime} must exceed kappa {self.kappa}")


class IndexHashFn:
    """Degree-1 polynomial hash of a single index into [0, kappa)."""

    __slots__ = ("mul", "add", "kappa", "prime")

    def __init__(self, mul: int, add: int, kappa: int, prime: int = MERSENNE_PRIME):
        if not 0 < mul < prime:
            raise ConfigError(f"multiplier must be in (0, prime), got {mul}")
        if not 0 <= add < prime:
            raise ConfigError(f"offset must be in [0, prime), got {add}")
        if kappa < 1:
            raise ConfigError(f"kappa must be >= 1, got {kappa}")
        self.mul = mul
        self.add = add
        self.kappa = kappa
        self.prime = prime

    def __call__(self, index: int) -> int:
        return ((self.mul * index + self.add) % self.prime) % self.kappa

    def values(self, indices) -> list[int]:
        """Hash a batch of indices (tight loop with bound locals)."""
        mul, add, prime, kappa = self.mul, self.add, self.prime, self.kappa
        return [((mul * i + add) % prime) % kappa for i in indices]

    def __eq__(self, other):
        return (
            isinstance(other, IndexHashFn)
            and (self.mul, self.add, self.kappa, self.prime)
            == (other.mul, other.add, other.kappa, other.prime)
        )

    def __repr__(self):
        return f"IndexHashFn(mul={self.mul}, add={self.add}, kappa={self.kappa})"


class SignHashFn:
    """Pairwise-independent sign hash of an entry (row, col) to +1 or -1."""

    __slots__ = ("mul", "add", "prime")

    def __init__(self, mul: int, add: int, prime: int = MERSENNE_PRIME):
        if not 0 < mul < prime:
            raise ConfigError(f"multiplier must be in (0, prime), got {mul}")
        if not 0 <= add < prime:
            raise ConfigError(f"offset must be in [0, prime), got {add}")
        self.mul = mul
        self.add = add
        self.prime = prime

    def __call__(self, row: int, col: int) -> int:
        packed = (row << 32) | col
        return 1 - 2 * (((self.mul * packed + self.add) % self.prime) & 1)

    def __eq__(self, other):
        return (
            isinstance(other, SignHashFn)
            and (self.mul, self.add, self.prime) == (other.mul, other.add, other.prime)
        )

    def __repr__(self):
        return f"SignHashFn(mul={self.mul}, add={self.add})"


class EntryHasher(NamedTuple):
    """The full hash description broadcast to every worker."""

    row_hash: IndexHashFn
    col_hash: IndexHashFn
    sign_hash: SignHashFn

    @property
    def kappa(self) -> int:
        return self.row_hash.kappa

    def bucket_of(self, row: int, col: int) -> int:
        return (self.row_hash(row) + self.col_hash(col)) % self.kappa


def make_hashes(config: HashConfig) -> EntryHasher:
    """Draw independent (row, col, sign) hash functions from one seed.

    Deterministic: the same config yields bit-identical functions, which is
    what makes separately-running workers agree on every bucket.
    """
    rng = random.Random(config.seed)
    prime = config.prime

    def draw():
        return rng.randrange(1, prime), rng.randrange(0, prime)

    row_mul, row_add = draw()
    col_mul, col_add = draw()
    sign_mul, sign_add = draw()
    return EntryHasher(
        IndexHashFn(row_mul, row_add, config.kappa, prime),
        IndexHashFn(col_mul, col_add, config.kappa, prime),
        SignHashFn(sign_mul, sign_add, prime),
    )


def entry_hash(row_hash: IndexHashFn, col_hash: IndexHashFn, entry) -> int:
    """Bucket of an entry: (row_hash(i) + col_hash(j)) mod kappa."""
    if row_hash.kappa != col_hash.kappa:
        raise ConfigError("row and col hashes disagree on kappa")
    row, col = entry
    return (row_hash(row) + col_hash(col)) % row_hash.kappa


# --- broadcastable text form --------------------------------------------------

_FORMAT_TAG = "crop-hashes 1"


def hasher_to_text(hasher: EntryHasher, seed: int | None = None) -> str:
    """Serialize a hash description so another process can rebuild it exactly."""
    lines = [
        _FORMAT_TAG,
        f"kappa {hasher.kappa}",
        f"prime {hasher.row_hash.prime}",
        f"row {hasher.row_hash.mul} {hasher.row_hash.add}",
        f"col {hasher.col_hash.mul} {hasher.col_hash.add}",
        f"sign {hasher.sign_hash.mul} {hasher.sign_hash.add}",
    ]
    if seed is not None:
        lines.insert(1, f"seed {seed}")
    return "\n".join(lines) + "\n"


def hasher_from_text(text: str) -> EntryHasher:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != _FORMAT_TAG:
        raise InputError(f"not a hash description (expected {_FORMAT_TAG!r} header)")
    fields: dict[str, list[int]] = {}
    for ln in lines[1:]:
        parts = ln.split()
        try:
            fields[parts[0]] = [int(p) for p in parts[1:]]
        except ValueError:
            raise InputError(f"malformed hash description line {ln!r}") from None
    try:
        kappa = fields["kappa"][0]
        prime = fields["prime"][0]
        row = fields["row"]
        col = fields["col"]
        sign = fields["sign"]
    except (KeyError, IndexError):
        raise InputError("incomplete hash description") from None
    return EntryHasher(
        IndexHashFn(row[0], row[1], kappa, prime),
        IndexHashFn(col[0], col[1], kappa, prime),
        SignHashFn(sign[0], sign[1], prime),
    )
