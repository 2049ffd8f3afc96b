"""mcprioq: concurrent sparse Markov chain with count-ordered edge lists.

Transitions are recorded in O(1) and per-source edge lists stay
approximately sorted by count, so descending-probability inference reads
only the prefix it needs. Readers never block: hash arrays and edge entries
are reclaimed through a shared epoch domain, and adjacent-entry swaps are
published in an order that keeps overlapping traversals safe.
"""

from .bench import (
    BenchReport,
    WorkloadConfig,
    ZipfSampler,
    latency_bucket,
    run_bench,
    zipf_sample,
)
from .edges import EdgeEntry, EdgeQueue
from .errors import (
    InputError,
    SnapshotError,
    StreamParseError,
    TraversalAnomalyError,
    UseAfterReclaimError,
)
from .graph import (
    DecayConfig,
    DecayResult,
    Graph,
    GraphStats,
    Recommendation,
    RecordResult,
    SourceEntry,
)
from .ids import validate_node_id
from .index import IndexTable
from .oracle import OracleGraph
from .reclaim import EpochDomain, ReadGuard
from .snapshot import (
    ParseStats,
    TransitionRecord,
    parse_stream,
    read_snapshot,
    write_snapshot,
)

__version__ = "0.1.0"

__all__ = [
    "BenchReport",
    "DecayConfig",
    "DecayResult",
    "EdgeEntry",
    "EdgeQueue",
    "EpochDomain",
    "Graph",
    "GraphStats",
    "IndexTable",
    "InputError",
    "OracleGraph",
    "ParseStats",
    "ReadGuard",
    "Recommendation",
    "RecordResult",
    "SnapshotError",
    "SourceEntry",
    "StreamParseError",
    "TransitionRecord",
    "TraversalAnomalyError",
    "UseAfterReclaimError",
    "WorkloadConfig",
    "ZipfSampler",
    "latency_bucket",
    "parse_stream",
    "read_snapshot",
    "run_bench",
    "validate_node_id",
    "write_snapshot",
    "zipf_sample",
]
