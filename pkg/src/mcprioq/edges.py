"""Count-ordered concurrent edge list.

Each source owns one doubly linked list of destination entries kept in
non-increasing transition-count order between sentinels. Counts only grow
outside decay and grow by one at a time, so the list is never far from
sorted; when an increment creates an inversion the entry bubbles toward the
head one neighbour swap at a time.

A swap of adjacent entries is published as six single stores. With
predecessor P, entries A then B, successor N (``P <-> A <-> B <-> N``):

    1. A.next = N
    2. B.next = A
    3. P.next = B
    4. B.prev = P
    5. A.prev = B
    6. N.prev = A

A forward reader overlapping one swap observes exactly one of

    P A B N    (nothing visible yet)
    P A N      (B skipped: read A.next after store 1, B not reachable)
    P A B A N  (A revisited: reached B before store 1 landed, then B -> A)
    P B A N    (swap complete)

and never a cycle: store 2 aims B back at A only after store 1 already aims
A past B, so following next pointers always makes progress toward the tail.
Readers stay wait-free; each traversal enforces the visit bound
``linked_count + 2 * swaps_overlapped + unlinks_overlapped + 2`` (the +2
absorbs the at-most-one mutation the permit allows to be mid-flight when
the traversal snapshots the counters) and raises TraversalAnomalyError
beyond it.

Structural mutations on one queue (push, swap, unlink) are serialized by the
queue's reorder permit. The fast path takes it with a non-blocking
try-acquire: a writer that loses the race simply skips re-sorting, because
its count increment is already published and order is only approximate by
contract. Paths that must mutate (insert, decay, stabilize) spin on a
bounded acquire instead.
"""

import threading

from .atomics import stripe_for
from .errors import TraversalAnomalyError, UseAfterReclaimError

# Bounded spin step for must-acquire callers; holders only execute short
# pointer updates, so waits are microseconds in practice.
_PERMIT_SPIN_SECS = 0.01


class EdgeEntry:
    """One destination edge. Reachable from the dst index even after being
    unlinked from the queue; ``unlinked`` is the logical-removal mark."""

    __slots__ = ("dst", "count", "prev", "next", "unlinked", "retired", "destroyed")

    def __init__(self, dst, count: int = 0):
        self.dst = dst
        self.count = count
        self.prev = None
        self.next = None
        self.unlinked = False
        self.retired = False
        self.destroyed = False

    def increment(self) -> int:
        """Exact count += 1; returns the new count."""
        with stripe_for(self):
            new = self.count + 1
            self.count = new
        return new

    def __repr__(self):
        return f"EdgeEntry({self.dst!r}, count={self.count})"


class EdgeQueue:
    """Doubly linked count-ordered list with head/tail sentinels."""

    __slots__ = (
        "_domain",
        "head",
        "tail",
        "permit",
        "linked_count",
        "swap_count",
        "unlink_count",
    )

    def __init__(self, domain):
        self._domain = domain
        self.head = EdgeEntry(None)
        self.tail = EdgeEntry(None)
        self.head.next = self.tail
        self.tail.prev = self.head
        self.permit = threading.Lock()
        self.linked_count = 0
        self.swap_count = 0
        self.unlink_count = 0

    # -- permit helpers ------------------------------------------------------

    def try_permit(self) -> bool:
        return self.permit.acquire(blocking=False)

    def acquire_permit(self) -> None:
        """Bounded-spin acquire for callers that must mutate."""
        while not self.permit.acquire(timeout=_PERMIT_SPIN_SECS):
            pass

    def release_permit(self) -> None:
        self.permit.release()

    # -- mutations (caller holds the permit) ---------------------------------

    def push_tail(self, entry: EdgeEntry) -> None:
        """Link entry before the tail sentinel."""
        assert self.permit.locked(), "push_tail without the reorder permit"
        last = self.tail.prev
        entry.prev = last
        entry.next = self.tail
        # Grow the traversal bound before the entry becomes reachable.
        self.linked_count += 1
        last.next = entry
        self.tail.prev = entry

    def swap_adjacent(self, a: EdgeEntry, b: EdgeEntry) -> None:
        """Swap a with its immediate successor b, publication order above."""
        assert self.permit.locked(), "swap_adjacent without the reorder permit"
        p = a.prev
        n = b.next
        # Count first: any reader that can observe an anomalous shape from
        # this swap reads the counter after this store.
        self.swap_count += 1
        a.next = n
        b.next = a
        p.next = b
        b.prev = p
        a.prev = b
        n.prev = a

    def bubble_up(self, entry: EdgeEntry) -> int:
        """Swap entry toward the head while it strictly beats its
        predecessor. Ties do not move, so equal-count entries keep their
        arrival order. Returns the number of swaps."""
        assert self.permit.locked(), "bubble_up without the reorder permit"
        swaps = 0
        if entry.prev is None or entry.unlinked:
            # Published in the dst index but not linked yet (or already
            # unlinked by a decay that beat us to the permit).
            return swaps
        head = self.head
        while True:
            pred = entry.prev
            if pred is head or pred.count >= entry.count:
                return swaps
            self.swap_adjacent(pred, entry)
            swaps += 1

    def unlink(self, entry: EdgeEntry) -> None:
        """Splice entry out and retire it. The entry keeps its own links so
        an overlapping reader positioned on it still finds the tail."""
        assert self.permit.locked(), "unlink without the reorder permit"
        assert not entry.unlinked, "entry unlinked twice"
        entry.unlinked = True
        self.unlink_count += 1
        p = entry.prev
        n = entry.next
        p.next = n
        n.prev = p
        self.linked_count -= 1
        self._domain.retire(entry)

    # -- reads (caller holds a ReadGuard) -------------------------------------

    def __iter__(self):
        """Forward traversal, wait-free, bound-checked, canary-checked.

        The caller must hold a ReadGuard on the queue's domain for the whole
        iteration: entries yielded here may be unlinked concurrently and the
        guard is what keeps them from being destroyed mid-walk.
        """
        swaps_before = self.swap_count
        unlinks_before = self.unlink_count
        steps = 0
        node = self.head.next
        tail = self.tail
        while node is not tail:
            if node.destroyed:
                raise UseAfterReclaimError(
                    f"traversal reached reclaimed entry {node.dst!r}"
                )
            steps += 1
            bound = (
                self.linked_count
                + 2 * (self.swap_count - swaps_before)
                + (self.unlink_count - unlinks_before)
                + 2
            )
            if steps > bound:
                raise TraversalAnomalyError(
                    f"traversal took {steps} steps, bound {bound}"
                )
            yield node
            node = node.next

    def traverse(self, visitor) -> int:
        """Call visitor(entry) for each entry; returns entries visited."""
        seen = 0
        for entry in self:
            visitor(entry)
            seen += 1
        return seen

    # -- maintenance ----------------------------------------------------------

    def stabilize(self) -> int:
        """Bubble-sort passes until a full pass makes no swap.

        Takes the permit itself. Returns the number of passes (>= 1).
        Concurrent readers see the usual single-swap anomalies only.
        """
        self.acquire_permit()
        try:
            passes = 0
            head = self.head
            tail = self.tail
            while True:
                passes += 1
                swapped = 0
                entry = head.next
                while entry is not tail:
                    nxt = entry.next
                    while entry.prev is not head and entry.prev.count < entry.count:
                        self.swap_adjacent(entry.prev, entry)
                        swapped += 1
                    entry = nxt
                if swapped == 0:
                    return passes
        finally:
            self.release_permit()

    # -- quiescent helpers (tests, snapshots) ----------------------------------

    def to_pairs(self):
        """[(dst, count), ...] in queue order; quiescent use only."""
        return [(e.dst, e.count) for e in self]

    def is_sorted(self) -> bool:
        """True when counts are non-increasing head to tail."""
        prev = None
        for entry in self:
            if prev is not None and entry.count > prev:
                return False
            prev = entry.count
        return True
