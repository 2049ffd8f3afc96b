import sys
import threading
import time

import pytest

from mcprioq import EpochDomain


class Payload:
    __slots__ = ("value", "retired", "destroyed")

    def __init__(self, value=0):
        self.value = value
        self.retired = False
        self.destroyed = False


def test_retire_without_readers_destroys_on_advance():
    domain = EpochDomain(advance_every=1)
    obj = Payload()
    domain.retire(obj)
    assert obj.retired
    assert obj.destroyed
    assert domain.pending_retired == 0


def test_guard_pins_retired_object():
    domain = EpochDomain(advance_every=1)
    obj = Payload()
    guard = domain.enter_read()
    domain.retire(obj)
    assert obj.retired
    assert not obj.destroyed  # we might still hold a reference
    domain.exit_read(guard)
    domain.quiesce()
    assert obj.destroyed


def test_late_reader_does_not_block_earlier_garbage():
    domain = EpochDomain(advance_every=1)
    g1 = domain.enter_read()
    x = Payload()
    domain.retire(x)  # advances the epoch; x stays pinned by g1
    assert not x.destroyed
    domain.exit_read(g1)
    g2 = domain.enter_read()  # enters in the post-retirement epoch
    y = Payload()
    domain.retire(y)  # reclaim pass runs here
    assert x.destroyed  # g2 entered after x's grace period began
    assert not y.destroyed  # y is pinned by g2
    domain.exit_read(g2)
    domain.quiesce()
    assert y.destroyed


def test_nested_guards_are_reentrant_lifo():
    domain = EpochDomain(advance_every=1)
    outer = domain.enter_read()
    inner = domain.enter_read()
    obj = Payload()
    domain.retire(obj)
    domain.exit_read(inner)
    assert not obj.destroyed  # outer still pins
    domain.exit_read(outer)
    domain.quiesce()
    assert obj.destroyed


def test_exit_out_of_lifo_order_asserts():
    domain = EpochDomain()
    outer = domain.enter_read()
    inner = domain.enter_read()
    with pytest.raises(AssertionError):
        domain.exit_read(outer)
    domain.exit_read(inner)
    domain.exit_read(outer)


def test_double_exit_asserts():
    domain = EpochDomain()
    guard = domain.enter_read()
    domain.exit_read(guard)
    with pytest.raises(AssertionError):
        domain.exit_read(guard)


def test_double_retire_asserts():
    domain = EpochDomain(advance_every=10**9)
    obj = Payload()
    domain.retire(obj)
    with pytest.raises(AssertionError):
        domain.retire(obj)


def test_quiesce_inside_guard_asserts():
    domain = EpochDomain()
    with domain.read_section():
        with pytest.raises(AssertionError):
            domain.quiesce()


def test_quiesce_waits_for_reader_thread():
    domain = EpochDomain(advance_every=1)
    entered = threading.Event()
    release = threading.Event()

    def reader():
        with domain.read_section():
            entered.set()
            release.wait()

    t = threading.Thread(target=reader)
    t.start()
    entered.wait()
    obj = Payload()
    domain.retire(obj)
    assert not obj.destroyed

    done = []

    def quiescer():
        domain.quiesce()
        done.append(True)

    q = threading.Thread(target=quiescer)
    q.start()
    time.sleep(0.05)
    assert not done  # still blocked on the reader
    release.set()
    q.join(timeout=5)
    t.join(timeout=5)
    assert done and obj.destroyed


def test_read_section_context_manager():
    domain = EpochDomain()
    with domain.read_section() as guard:
        assert guard.epoch_at_entry == domain.current_epoch
    # clean exit: a second section on the same thread works
    with domain.read_section():
        pass


def test_stress_no_destroy_while_guarded():
    # Writers keep replacing a shared cell and retiring the old value;
    # readers assert the value they fetched inside a guard is never
    # destroyed while they look at it.
    domain = EpochDomain(advance_every=4)

    class Box:
        value = Payload()

    stop = threading.Event()
    failures = []
    swap_lock = threading.Lock()
    old_interval = sys.getswitchinterval()
    sys.setswitchinterval(1e-5)
    try:
        def reader():
            try:
                while not stop.is_set():
                    with domain.read_section():
                        obj = Box.value
                        for _ in range(3):
                            if obj.destroyed:
                                failures.append("destroyed under guard")
                                return
            except Exception as exc:  # pragma: no cover - diagnostic
                failures.append(repr(exc))

        def writer():
            try:
                while not stop.is_set():
                    fresh = Payload()
                    with swap_lock:
                        old = Box.value
                        Box.value = fresh
                    domain.retire(old)
            except Exception as exc:  # pragma: no cover - diagnostic
                failures.append(repr(exc))

        threads = [threading.Thread(target=reader) for _ in range(4)]
        threads += [threading.Thread(target=writer) for _ in range(2)]
        for t in threads:
            t.start()
        time.sleep(1.0)
        stop.set()
        for t in threads:
            t.join(timeout=10)
    finally:
        sys.setswitchinterval(old_interval)
    assert not failures
    domain.quiesce()
    assert domain.pending_retired == 0
