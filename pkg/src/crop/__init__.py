"""Consistent parallel sketching of sparse outer-product streams.

The product of two sparse matrices is streamed as column-row outer products.
Output entries are hashed to buckets by a structured pairwise-independent
hash; disjoint bucket intervals are owned by independent workers, each of
which enumerates exactly its own entries of every outer product in linear
expected time. Per-bucket Space-Saving summaries and Count-Sketch cells then
bound and estimate the heaviest entries of the product.
"""

from .countsketch import CountSketch, MedianEstimator, median_query
from .engine import (
    BalanceCheck,
    EngineConfig,
    LoadReport,
    SketchState,
    TopEntry,
    load_balance_check,
    load_state,
    measure_loads,
    merge_partials,
    run,
    run_parallel,
    run_worker,
    save_state,
)
from .errors import (
    ConfigError,
    CropError,
    DimensionError,
    InputError,
    ParseError,
    ResourceCapError,
)
from .hashing import (
    EntryHasher,
    HashConfig,
    IndexHashFn,
    SignHashFn,
    derive_seed,
    entry_hash,
    make_hashes,
)
from .interval import (
    HashedIndexArray,
    ScanStats,
    WorkerAssignment,
    bucket_sort_indices,
    count_interval,
    enumerate_interval,
)
from .mining import (
    bound_ratio_report,
    mine,
    recall_at_k,
    transaction_to_outer,
    transactions_to_stream,
)
from .oracle import (
    ZipfModel,
    exact_pair_supports,
    exact_product,
    exact_top,
    gen_zipf_stream,
    gen_zipf_transactions,
)
from .sparse import (
    Entry,
    OuterProductStream,
    SparseVector,
    load_column_row_streams,
    outer_product_nnz,
    read_fimi,
    write_fimi,
    write_triple_file,
)
from .spacesaving import SpaceSavingSummary

__version__ = "0.1.0"

__all__ = [
    "BalanceCheck",
    "ConfigError",
    "CountSketch",
    "CropError",
    "DimensionError",
    "EngineConfig",
    "Entry",
    "EntryHasher",
    "HashConfig",
    "HashedIndexArray",
    "IndexHashFn",
    "InputError",
    "LoadReport",
    "MedianEstimator",
    "OuterProductStream",
    "ParseError",
    "ResourceCapError",
    "ScanStats",
    "SignHashFn",
    "SketchState",
    "SpaceSavingSummary",
    "SparseVector",
    "TopEntry",
    "WorkerAssignment",
    "ZipfModel",
    "bound_ratio_report",
    "bucket_sort_indices",
    "count_interval",
    "derive_seed",
    "entry_hash",
    "enumerate_interval",
    "exact_pair_supports",
    "exact_product",
    "exact_top",
    "gen_zipf_stream",
    "gen_zipf_transactions",
    "load_balance_check",
    "load_column_row_streams",
    "load_state",
    "make_hashes",
    "measure_loads",
    "median_query",
    "merge_partials",
    "mine",
    "outer_product_nnz",
    "read_fimi",
    "recall_at_k",
    "run",
    "run_parallel",
    "run_worker",
    "save_state",
    "transaction_to_outer",
    "transactions_to_stream",
    "write_fimi",
    "write_triple_file",
]
