"""Concurrent sparse Markov graph with count-ordered adjacency.

A Graph maps source ids to SourceEntry records through a concurrent index;
each source owns a count-ordered EdgeQueue plus a dst index for O(1) edge
lookup. record_transition is constant-time: one index hit (or insert), one
counter increment, and at most a short bubble toward the head under a
try-acquired permit. Inference walks a queue front-to-back under a read
guard, so it touches only as many entries as the answer needs.

Consistency contract, matching what the tests assert: edge counts and source
totals never lose increments (striped-lock read-modify-write); a reader may
observe an edge count before the matching total update, so probabilities are
approximate while writers run and exact at quiescence. Decay is approximate
around concurrent writers by design: an increment landing on an entry while
decay rewrites it can be absorbed into the pre-decay value, and an increment
on an entry decay just unlinked is dropped; totals are recomputed from
post-decay counts, and stabilize_all() re-syncs totals at quiescence.
"""

import threading
import time
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .atomics import stripe_for
from .edges import EdgeEntry, EdgeQueue
from .errors import InputError
from .ids import validate_node_id
from .index import IndexTable
from .reclaim import EpochDomain


@dataclass(frozen=True)
class DecayConfig:
    """Decay policy. factor in (0, 1]; triggers are optional and additive:
    every_n_transitions fires on the recording thread every N records,
    interval_secs fires on the first record after the interval elapses.
    With neither set, decay is manual only."""

    factor: float = 0.5
    every_n_transitions: Optional[int] = None
    interval_secs: Optional[float] = None

    def __post_init__(self):
        if not (0.0 < self.factor <= 1.0):
            raise InputError(f"decay factor must be in (0, 1], got {self.factor}")
        if self.every_n_transitions is not None and self.every_n_transitions < 1:
            raise InputError("every_n_transitions must be >= 1")
        if self.interval_secs is not None and self.interval_secs <= 0:
            raise InputError("interval_secs must be > 0")


@dataclass
class Recommendation:
    """Inference result. found is False only for an unknown source; a known
    source with no surviving edges yields found=True and empty items."""

    items: list = field(default_factory=list)  # [(dst, probability), ...]
    cumulative: float = 0.0
    found: bool = False


class RecordResult(NamedTuple):
    created: bool  # a new edge entry was linked (first sighting or revival)
    swaps: int  # neighbour swaps performed by the bubble step


class DecayResult(NamedTuple):
    edges_removed: int
    sources_emptied: int


class GraphStats(NamedTuple):
    sources: int
    edges: int
    transitions: int  # sum of live source totals (shrinks under decay)


class SourceEntry:
    """Per-source state: running total, ordered queue, dst lookup index."""

    __slots__ = ("total", "queue", "dst_index")

    def __init__(self, domain):
        self.total = 0
        self.queue = EdgeQueue(domain)
        self.dst_index = IndexTable(domain)

    def add_total(self, delta: int) -> None:
        with stripe_for(self):
            self.total += delta


class Graph:
    """Thread-safe for any mix of record/recommend/decay callers."""

    def __init__(self, decay: Optional[DecayConfig] = None,
                 domain: Optional[EpochDomain] = None):
        self.config = decay if decay is not None else DecayConfig()
        self.domain = domain if domain is not None else EpochDomain()
        self._src_index = IndexTable(self.domain)
        self._decay_lock = threading.Lock()
        self._trigger_count = 0
        self._last_decay = time.monotonic()

    # -- updates ---------------------------------------------------------------

    def record_transition(self, src: str, dst: str) -> RecordResult:
        """Record one src -> dst transition; O(1) plus bubbling."""
        validate_node_id(src)
        validate_node_id(dst)
        domain = self.domain
        guard = domain.enter_read()
        try:
            source = self._src_index.get(src)
            if source is None:
                _, source = self._src_index.put_if_absent(src, SourceEntry(domain))
            queue = source.queue
            entry = source.dst_index.get(dst)
            if entry is None:
                fresh = EdgeEntry(dst, 1)
                inserted, entry = source.dst_index.put_if_absent(dst, fresh)
                if inserted:
                    queue.acquire_permit()
                    try:
                        queue.push_tail(fresh)
                    finally:
                        queue.release_permit()
                    source.add_total(1)
                    # A count-1 entry at the tail never beats a live
                    # predecessor, so no bubble attempt is needed.
                    result = RecordResult(True, 0)
                    self._after_record()
                    return result
                # Lost the insert race; fall through with the winner's entry.
            if entry.unlinked:
                result = self._revive(source, dst, entry)
                source.add_total(1)
                self._after_record()
                return result
            entry.increment()
            source.add_total(1)
            swaps = 0
            if queue.try_permit():
                try:
                    swaps = queue.bubble_up(entry)
                finally:
                    queue.release_permit()
            result = RecordResult(False, swaps)
            self._after_record()
            return result
        finally:
            domain.exit_read(guard)

    def _revive(self, source: SourceEntry, dst: str, stale: EdgeEntry) -> RecordResult:
        """Re-materialize an edge whose entry decay unlinked.

        The dst index never removes keys, so the stale entry still occupies
        the slot; publish a fresh entry over it under the queue permit,
        which serializes revivals against decay and each other.
        """
        queue = source.queue
        queue.acquire_permit()
        try:
            current = source.dst_index.get(dst)
            if current is not None and not current.unlinked:
                # Someone revived it while we waited for the permit.
                current.increment()
                swaps = queue.bubble_up(current)
                return RecordResult(False, swaps)
            fresh = EdgeEntry(dst, 1)
            replaced = source.dst_index.replace(dst, current, fresh)
            assert replaced, "revival raced despite holding the permit"
            queue.push_tail(fresh)
            return RecordResult(True, 0)
        finally:
            queue.release_permit()

    def _after_record(self) -> None:
        """Fire configured decay triggers; manual-only configs cost one branch."""
        config = self.config
        if config.every_n_transitions is None and config.interval_secs is None:
            return
        due = False
        if config.every_n_transitions is not None:
            with stripe_for(self):
                self._trigger_count += 1
                if self._trigger_count >= config.every_n_transitions:
                    self._trigger_count = 0
                    due = True
        if not due and config.interval_secs is not None:
            due = time.monotonic() - self._last_decay >= config.interval_secs
        if due and self._decay_lock.acquire(blocking=False):
            try:
                self.decay()
            finally:
                self._decay_lock.release()

    # -- inference ---------------------------------------------------------------

    def recommend_top_n(self, src: str, n: int) -> Recommendation:
        """Up to n most-likely destinations in non-increasing probability."""
        validate_node_id(src)
        if n < 0:
            raise InputError(f"n must be >= 0, got {n}")
        with self.domain.read_section():
            source = self._src_index.get(src)
            if source is None:
                return Recommendation([], 0.0, False)
            items = []
            cumulative = 0.0
            total = source.total
            if n > 0 and total > 0:
                for entry in source.queue:
                    p = entry.count / total
                    items.append((entry.dst, p))
                    cumulative += p
                    if len(items) >= n:
                        break
            return Recommendation(items, cumulative, True)

    def recommend_cumulative(self, src: str, threshold: float) -> Recommendation:
        """Shortest queue prefix whose probability mass reaches threshold.

        Cost is O(position of the quantile), the point of keeping queues
        ordered: mass concentrates at the head, so small thresholds touch a
        handful of entries. Returns the whole list if the mass never
        reaches threshold (possible transiently under concurrent writes).
        """
        validate_node_id(src)
        if not (0.0 <= threshold <= 1.0):
            raise InputError(f"threshold must be in [0, 1], got {threshold}")
        with self.domain.read_section():
            source = self._src_index.get(src)
            if source is None:
                return Recommendation([], 0.0, False)
            items = []
            cumulative = 0.0
            total = source.total
            if threshold > 0.0 and total > 0:
                for entry in source.queue:
                    p = entry.count / total
                    items.append((entry.dst, p))
                    cumulative += p
                    if cumulative >= threshold:
                        break
            return Recommendation(items, cumulative, True)

    # -- maintenance ---------------------------------------------------------------

    def decay(self, factor: Optional[float] = None) -> DecayResult:
        """Scale every edge count by factor (default from config), flooring;
        unlink entries that reach zero; set each total to the surviving sum.
        Safe alongside writers, with the approximate contract noted in the
        module docstring. factor 1.0 leaves counts and order untouched."""
        f = self.config.factor if factor is None else factor
        if not (0.0 < f <= 1.0):
            raise InputError(f"decay factor must be in (0, 1], got {f}")
        removed = 0
        emptied = 0
        with self.domain.read_section():
            for _, source in self._src_index.items():
                queue = source.queue
                queue.acquire_permit()
                try:
                    had_edges = queue.linked_count > 0
                    new_total = 0
                    entry = queue.head.next
                    tail = queue.tail
                    while entry is not tail:
                        nxt = entry.next
                        scaled = int(entry.count * f)
                        if scaled <= 0:
                            queue.unlink(entry)
                            removed += 1
                        else:
                            entry.count = scaled
                            new_total += scaled
                        entry = nxt
                    source.total = new_total
                    if had_edges and queue.linked_count == 0:
                        emptied += 1
                finally:
                    queue.release_permit()
        return DecayResult(removed, emptied)

    def stabilize_all(self) -> None:
        """Fully sort every queue and re-sync every total to its count sum.
        Intended at quiescence (snapshots, post-bench verification); safe,
        but not exact, alongside writers."""
        with self.domain.read_section():
            for _, source in self._src_index.items():
                source.queue.stabilize()
                source.total = sum(e.count for e in source.queue)

    def quiesce(self) -> None:
        """Drain the reclamation domain; see EpochDomain.quiesce."""
        self.domain.quiesce()

    # -- introspection ---------------------------------------------------------------

    def stats(self) -> GraphStats:
        sources = 0
        edges = 0
        transitions = 0
        with self.domain.read_section():
            for _, source in self._src_index.items():
                sources += 1
                edges += source.queue.linked_count
                transitions += source.total
        return GraphStats(sources, edges, transitions)

    def source_entry(self, src: str):
        """The SourceEntry for src, or None. For tests and tooling."""
        with self.domain.read_section():
            return self._src_index.get(src)

    def export_sources(self):
        """[(src, total, [(dst, count), ...]), ...] sorted by src.

        Queue order is preserved within a source. Quiescent use only:
        concurrent writers make the dump approximate, exactly like any
        other read.
        """
        out = []
        with self.domain.read_section():
            for src, source in self._src_index.items():
                out.append((src, source.total, source.queue.to_pairs()))
        out.sort(key=lambda item: item[0])
        return out

    def restore_source(self, src: str, total: int, pairs) -> None:
        """Install a source with the given queue order verbatim (no
        re-sorting) and the stated total. For snapshot loading; raises
        InputError on a duplicate source or destination."""
        validate_node_id(src)
        with self.domain.read_section():
            fresh = SourceEntry(self.domain)
            inserted, source = self._src_index.put_if_absent(src, fresh)
            if not inserted:
                raise InputError(f"source {src!r} restored twice")
            queue = source.queue
            queue.acquire_permit()
            try:
                for dst, count in pairs:
                    validate_node_id(dst)
                    entry = EdgeEntry(dst, count)
                    ok, _ = source.dst_index.put_if_absent(dst, entry)
                    if not ok:
                        raise InputError(
                            f"destination {dst!r} restored twice under {src!r}"
                        )
                    queue.push_tail(entry)
            finally:
                queue.release_permit()
            source.total = total
