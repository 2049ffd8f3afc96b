"""Concurrent hash index from string keys to entries.

Readers never lock. The bucket array is replaced wholesale on resize and
published with one store; bucket chains are linked nodes whose next pointers
never change after publication (inserts push a new head), so a reader walking
a chain sees a consistent snapshot no matter what writers do. Inserts emulate
compare-and-swap on the bucket head: build the node optimistically, then take
the table lock just long enough to confirm nothing moved and store the head;
on interference, retry. Keys are never removed.

Old bucket arrays are retired through the reclamation domain, not dropped:
a reader can hold a reference to the previous array across a resize, and the
destroyed-flag canary on the array catches any grace-period bug.
"""

import threading

from .errors import UseAfterReclaimError

INITIAL_CAPACITY = 16
LOAD_FACTOR = 0.75


class _ChainNode:
    __slots__ = ("key", "hash", "entry", "next")

    def __init__(self, key, h, entry, nxt):
        self.key = key
        self.hash = h
        self.entry = entry
        self.next = nxt


class _BucketArray:
    __slots__ = ("slots", "retired", "destroyed")

    def __init__(self, capacity: int):
        self.slots = [None] * capacity
        self.retired = False
        self.destroyed = False


class IndexTable:
    """Insert-only concurrent map; capacities are powers of two."""

    __slots__ = ("_domain", "_array", "_count", "_lock")

    def __init__(self, domain, initial_capacity: int = INITIAL_CAPACITY):
        assert initial_capacity >= 1 and initial_capacity & (initial_capacity - 1) == 0
        self._domain = domain
        self._array = _BucketArray(initial_capacity)
        self._count = 0
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return self._count

    @property
    def capacity(self) -> int:
        return len(self._array.slots)

    def get(self, key):
        """Wait-free lookup; returns the entry or None."""
        array = self._array
        if array.destroyed:
            raise UseAfterReclaimError("lookup on a reclaimed bucket array")
        h = hash(key)
        node = array.slots[h & (len(array.slots) - 1)]
        while node is not None:
            if node.hash == h and node.key == key:
                return node.entry
            node = node.next
        return None

    def put_if_absent(self, key, entry):
        """Insert key -> entry unless present.

        Returns (inserted, current): (True, entry) on insert, else
        (False, existing_entry). Exactly one of two racing inserters wins.
        """
        h = hash(key)
        while True:
            array = self._array
            idx = h & (len(array.slots) - 1)
            head = array.slots[idx]
            node = head
            while node is not None:
                if node.hash == h and node.key == key:
                    return False, node.entry
                node = node.next
            new_node = _ChainNode(key, h, entry, head)
            with self._lock:
                # CAS: both the array and the observed head must be intact.
                if self._array is not array or array.slots[idx] is not head:
                    continue
                array.slots[idx] = new_node
                self._count += 1
                needs_grow = self._count > len(array.slots) * LOAD_FACTOR
            if needs_grow:
                self._grow(array)
            return True, entry

    def replace(self, key, expected, entry) -> bool:
        """Publish entry over expected for an existing key.

        Returns False if the key is absent or its entry is not ``expected``
        (identity compare). The store is a single field write, so concurrent
        readers see either the old or the new entry, never a torn state.
        """
        h = hash(key)
        with self._lock:
            array = self._array
            node = array.slots[h & (len(array.slots) - 1)]
            while node is not None:
                if node.hash == h and node.key == key:
                    if node.entry is not expected:
                        return False
                    node.entry = entry
                    return True
                node = node.next
            return False

    def _grow(self, seen_array) -> None:
        with self._lock:
            array = self._array
            if array is not seen_array:
                return  # someone else already grew past what we saw
            new_array = _BucketArray(len(array.slots) * 2)
            mask = len(new_array.slots) - 1
            for head in array.slots:
                node = head
                while node is not None:
                    idx = node.hash & mask
                    new_array.slots[idx] = _ChainNode(
                        node.key, node.hash, node.entry, new_array.slots[idx]
                    )
                    node = node.next
            self._array = new_array
        # Readers may still be walking the old array; let the grace period
        # decide when it is truly out of reach.
        self._domain.retire(seen_array)

    def items(self):
        """Wait-free iteration over a point-in-time array snapshot.

        Keys inserted concurrently may or may not appear; keys present
        before the call always do.
        """
        array = self._array
        if array.destroyed:
            raise UseAfterReclaimError("iteration on a reclaimed bucket array")
        for head in array.slots:
            node = head
            while node is not None:
                yield node.key, node.entry
                node = node.next

    def iterate(self, visitor) -> None:
        for key, entry in self.items():
            visitor(key, entry)
