import random
import sys
import threading
import time

import pytest

from mcprioq import (
    EdgeEntry,
    EdgeQueue,
    EpochDomain,
    TraversalAnomalyError,
    UseAfterReclaimError,
)
from swap_model import check_all, check_config


def make_queue():
    domain = EpochDomain(advance_every=4)
    return domain, EdgeQueue(domain)


def push_all(queue, pairs):
    queue.acquire_permit()
    try:
        entries = []
        for dst, count in pairs:
            entry = EdgeEntry(dst, count)
            queue.push_tail(entry)
            entries.append(entry)
        return entries
    finally:
        queue.release_permit()


def test_push_tail_keeps_arrival_order():
    _, queue = make_queue()
    push_all(queue, [("a", 3), ("b", 2), ("c", 1)])
    assert queue.to_pairs() == [("a", 3), ("b", 2), ("c", 1)]
    assert queue.linked_count == 3
    assert queue.is_sorted()


def test_bubble_up_moves_strictly_greater_only():
    _, queue = make_queue()
    entries = push_all(queue, [("a", 2), ("b", 2)])
    queue.acquire_permit()
    try:
        # equal counts: stays put
        assert queue.bubble_up(entries[1]) == 0
        entries[1].count = 3
        assert queue.bubble_up(entries[1]) == 1
    finally:
        queue.release_permit()
    assert queue.to_pairs() == [("b", 3), ("a", 2)]


def test_bubble_up_crosses_multiple_predecessors():
    _, queue = make_queue()
    entries = push_all(queue, [("a", 5), ("b", 3), ("c", 2), ("d", 1)])
    entries[3].count = 4
    queue.acquire_permit()
    try:
        assert queue.bubble_up(entries[3]) == 2
    finally:
        queue.release_permit()
    assert queue.to_pairs() == [("a", 5), ("d", 4), ("b", 3), ("c", 2)]
    assert queue.swap_count == 2


def test_bubble_up_unlinked_entry_is_a_noop():
    _, queue = make_queue()
    entries = push_all(queue, [("a", 1), ("b", 9)])
    queue.acquire_permit()
    try:
        queue.unlink(entries[1])
        assert queue.bubble_up(entries[1]) == 0
    finally:
        queue.release_permit()


def test_unlink_middle_and_ends():
    domain, queue = make_queue()
    entries = push_all(queue, [("a", 3), ("b", 2), ("c", 1)])
    queue.acquire_permit()
    try:
        queue.unlink(entries[1])
    finally:
        queue.release_permit()
    assert queue.to_pairs() == [("a", 3), ("c", 1)]
    assert entries[1].unlinked
    queue.acquire_permit()
    try:
        queue.unlink(entries[0])
        queue.unlink(entries[2])
    finally:
        queue.release_permit()
    assert queue.to_pairs() == []
    assert queue.linked_count == 0
    domain.quiesce()
    assert all(e.destroyed for e in entries)


def test_traversal_positioned_on_unlinked_entry_completes():
    domain, queue = make_queue()
    entries = push_all(queue, [("a", 3), ("b", 2), ("c", 1)])
    guard = domain.enter_read()
    walk = iter(queue)
    assert next(walk).dst == "a"
    assert next(walk).dst == "b"  # positioned on b now
    queue.acquire_permit()
    try:
        queue.unlink(entries[1])
    finally:
        queue.release_permit()
    assert [e.dst for e in walk] == ["c"]  # b's own links still lead on
    domain.exit_read(guard)
    domain.quiesce()
    assert entries[1].destroyed


def test_traversal_bound_catches_a_cycle():
    _, queue = make_queue()
    entries = push_all(queue, [("a", 3), ("b", 2)])
    entries[1].next = entries[0]  # corrupt the list behind the API's back
    with pytest.raises(TraversalAnomalyError):
        list(queue)


def test_traversal_canary_catches_destroyed_entry():
    _, queue = make_queue()
    entries = push_all(queue, [("a", 3), ("b", 2)])
    entries[1].destroyed = True  # simulate a reclamation bug
    with pytest.raises(UseAfterReclaimError):
        list(queue)


def test_stabilize_spec_trace():
    _, queue = make_queue()
    push_all(queue, [("b", 1), ("c", 3), ("d", 2)])
    passes = queue.stabilize()
    assert queue.to_pairs() == [("c", 3), ("d", 2), ("b", 1)]
    assert passes == 2  # one working pass plus the clean verification pass


def test_stabilize_matches_stable_sort():
    rng = random.Random(20240817)
    for _ in range(50):
        _, queue = make_queue()
        pairs = [(f"d{i}", rng.randint(1, 6)) for i in range(rng.randint(0, 12))]
        push_all(queue, pairs)
        queue.stabilize()
        # bubble sort with strict compare is stable: ties keep push order
        expected = sorted(pairs, key=lambda p: -p[1])
        assert queue.to_pairs() == expected
        assert queue.is_sorted()


def test_swap_model_exhaustive_small():
    stats = check_all(4)
    assert stats["configs"] == 6
    assert stats["paths"] > 0


def test_swap_model_all_outcomes_reachable():
    stats = check_config(4, 2)
    assert set(stats["outcomes"]) == {
        (1, 2, 3, 4),  # untouched
        (1, 2, 4),  # skipped the moving-up entry
        (1, 2, 3, 2, 4),  # revisited the moving-down entry
        (1, 3, 2, 4),  # swap complete
    }
    assert stats["max_steps"] <= 4 + 2


def test_random_double_swap_interleavings():
    # Two back-to-back swaps (one entry bubbling up two slots) interleaved
    # with a reader at random points, on the same pure pointer model the
    # exhaustive single-swap check uses. Samples the composition the
    # exhaustive check does not enumerate.
    from collections import Counter

    from swap_model import HEAD, TAIL, _apply, _build, _swap_stores

    rng = random.Random(77)
    for _ in range(2000):
        length = rng.randint(3, 6)
        mover = rng.randint(3, length)  # bubbles over mover-1 then mover-2
        nxt, prv = _build(length)
        stores = list(_swap_stores(nxt, prv, mover - 1, mover))
        after_first = (nxt, prv)
        for store in stores:
            after_first = _apply(*after_first, store)
        # The mutator computes the second swap's neighbours only after the
        # first swap is fully published, exactly like bubble_up does.
        stores += _swap_stores(after_first[0], after_first[1], mover - 2, mover)

        maps = (nxt, prv)
        applied = 0
        at = HEAD
        visited = []
        while True:
            if applied < len(stores) and rng.random() < 0.5:
                maps = _apply(*maps, stores[applied])
                applied += 1
                continue
            target = maps[0][at]
            if target == TAIL:
                break
            visited.append(target)
            at = target
            assert len(visited) <= length + 4  # two overlapping swaps

        counts = Counter(visited)
        movers = {mover, mover - 1, mover - 2}
        for entry in range(1, length + 1):
            if entry in movers:
                assert counts[entry] <= 2, (length, mover, visited)
            else:
                assert counts[entry] == 1, (length, mover, visited)
        untouched = [e for e in visited if e not in movers]
        assert untouched == sorted(untouched)

        while applied < len(stores):
            maps = _apply(*maps, stores[applied])
            applied += 1
        expected = [e for e in range(1, length + 1)]
        expected.remove(mover)
        expected.insert(mover - 3, mover)
        walk = [HEAD]
        while walk[-1] != TAIL:
            walk.append(maps[0][walk[-1]])
        assert walk == [HEAD] + expected + [TAIL]


def test_concurrent_increment_bubble_and_read():
    domain, queue = make_queue()
    entries = push_all(queue, [(f"d{i}", 1) for i in range(8)])
    stop = threading.Event()
    failures = []

    def writer(rng_seed):
        rng = random.Random(rng_seed)
        try:
            while not stop.is_set():
                entry = entries[rng.randrange(len(entries))]
                entry.increment()
                if queue.try_permit():
                    try:
                        queue.bubble_up(entry)
                    finally:
                        queue.release_permit()
        except Exception as exc:
            failures.append(repr(exc))

    def reader():
        try:
            while not stop.is_set():
                with domain.read_section():
                    seen = [e.dst for e in queue]
                if not seen:
                    failures.append("queue appeared empty")
                    return
        except Exception as exc:
            failures.append(repr(exc))

    threads = [threading.Thread(target=writer, args=(s,)) for s in range(4)]
    threads += [threading.Thread(target=reader) for _ in range(4)]
    old_interval = sys.getswitchinterval()
    sys.setswitchinterval(1e-5)
    try:
        for t in threads:
            t.start()
        time.sleep(1.5)
        stop.set()
        for t in threads:
            t.join(timeout=10)
    finally:
        sys.setswitchinterval(old_interval)
    assert not failures
    queue.stabilize()
    assert queue.is_sorted()
    assert queue.linked_count == 8
    assert sorted(e.dst for e in queue) == sorted(f"d{i}" for i in range(8))
