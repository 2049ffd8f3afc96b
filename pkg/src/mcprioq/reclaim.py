"""Epoch-based deferred reclamation shared by the index and edge queues.

Readers are wait-free: entering and leaving a read-side section is a pair of
stores on a per-thread record, never a lock. Writers first make an object
unreachable from the published structure, then retire() it; the object is
destroyed only after every reader that was inside a section at retirement
time has left. "Destroyed" means the object's ``destroyed`` flag flips to
True: nothing is actually freed (the GC owns memory), but traversals check
the flag on every visit, so a reclamation bug surfaces as a
UseAfterReclaimError instead of silent corruption.

Safety argument, in one paragraph: a reader publishes the global epoch into
its slot *before* raising its nesting depth, and a retired object is tagged
with the global epoch at retirement. Destruction requires
``retire_epoch < min(slot.epoch for active slots)``. A reader that could
still hold a reference must have entered before the object was unlinked,
hence before it was retired, hence with ``slot.epoch <= retire_epoch``; that
slot keeps the minimum at or below retire_epoch until the reader exits.
Readers entering later can observe an equal epoch but can no longer reach
the object, so pinning it is merely conservative.

Objects handed to retire() must expose two plain attributes, ``retired``
and ``destroyed``, both initially False.
"""

import threading
import time
from collections import deque
from contextlib import contextmanager

# Advance the global epoch every K retirements: frequent enough to keep the
# garbage backlog bounded at O(K), rare enough that the scan over reader
# slots stays off the hot path.
ADVANCE_EVERY = 64


class _ReaderSlot:
    """Per-thread reader record: nesting depth and entry epoch."""

    __slots__ = ("depth", "epoch")

    def __init__(self):
        self.depth = 0
        self.epoch = 0


class ReadGuard:
    """Token for one read-side section; exit through the issuing domain."""

    __slots__ = ("epoch_at_entry", "_slot", "_depth", "_exited")

    def __init__(self, epoch_at_entry: int, slot, depth: int):
        self.epoch_at_entry = epoch_at_entry
        self._slot = slot
        self._depth = depth
        self._exited = False


class EpochDomain:
    """One reclamation domain; every structure in a graph shares one, so a
    single grace-period computation covers hash arrays and edge entries."""

    def __init__(self, advance_every: int = ADVANCE_EVERY):
        if advance_every < 1:
            raise ValueError("advance_every must be >= 1")
        self._epoch = 1
        self._advance_every = advance_every
        self._tls = threading.local()
        self._slots = []  # every slot ever registered; append-only
        self._reg_lock = threading.Lock()
        self._retire_lock = threading.Lock()
        self._retired = deque()  # (obj, retire_epoch), epochs non-decreasing
        self._retire_count = 0
        self._destroyed_count = 0

    # -- read side ---------------------------------------------------------

    def _my_slot(self) -> _ReaderSlot:
        slot = getattr(self._tls, "slot", None)
        if slot is None:
            slot = _ReaderSlot()
            self._tls.slot = slot
            with self._reg_lock:
                self._slots.append(slot)
        return slot

    def enter_read(self) -> ReadGuard:
        """Wait-free; reentrant. Nested guards must exit innermost-first."""
        slot = self._my_slot()
        if slot.depth == 0:
            # Publish the epoch before raising depth: a scanner that sees
            # depth > 0 is then guaranteed to see this epoch or an older one.
            slot.epoch = self._epoch
        slot.depth += 1
        return ReadGuard(slot.epoch, slot, slot.depth)

    def exit_read(self, guard: ReadGuard) -> None:
        slot = guard._slot
        assert not guard._exited, "ReadGuard exited twice"
        assert slot is self._my_slot(), "ReadGuard exited on a different thread"
        assert slot.depth == guard._depth, "ReadGuard exits out of LIFO order"
        guard._exited = True
        slot.depth -= 1

    @contextmanager
    def read_section(self):
        guard = self.enter_read()
        try:
            yield guard
        finally:
            self.exit_read(guard)

    # -- write side --------------------------------------------------------

    def retire(self, obj) -> None:
        """Queue an already-unreachable object for deferred destruction."""
        assert not obj.retired, "object retired twice"
        obj.retired = True
        with self._retire_lock:
            self._retired.append((obj, self._epoch))
            self._retire_count += 1
            if self._retire_count % self._advance_every == 0:
                self._epoch += 1
                self._reclaim_locked()

    def _min_active_epoch(self):
        """Smallest entry epoch over active readers, or None if none are.

        Reads each slot's epoch before its depth: if the depth read shows
        active, the epoch read is from that activation or an older one,
        never newer, so the minimum can only err low (safe).
        """
        min_epoch = None
        for slot in list(self._slots):
            epoch = slot.epoch
            if slot.depth > 0 and (min_epoch is None or epoch < min_epoch):
                min_epoch = epoch
        return min_epoch

    def _reclaim_locked(self) -> None:
        # Caller holds _retire_lock. Epochs in the queue are non-decreasing,
        # so stop at the first entry that is still pinned.
        min_active = self._min_active_epoch()
        retired = self._retired
        while retired and (min_active is None or retired[0][1] < min_active):
            obj, _ = retired.popleft()
            obj.destroyed = True
            self._destroyed_count += 1

    def quiesce(self) -> None:
        """Block until everything retired so far is destroyed.

        The caller must hold no ReadGuard (it would deadlock against its
        own pin, so that is asserted).
        """
        assert self._my_slot().depth == 0, "quiesce() inside a ReadGuard"
        with self._retire_lock:
            self._epoch += 1
            target = self._retire_count
        while True:
            with self._retire_lock:
                self._reclaim_locked()
                if self._destroyed_count >= target:
                    return
            time.sleep(0.00005)

    # -- introspection (tests, stats) ---------------------------------------

    @property
    def current_epoch(self) -> int:
        return self._epoch

    @property
    def pending_retired(self) -> int:
        return len(self._retired)

    @property
    def destroyed_count(self) -> int:
        return self._destroyed_count
