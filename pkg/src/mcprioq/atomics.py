"""Striped locks for exact read-modify-write on shared counters.

CPython's GIL makes a single attribute load or store atomic, but a
read-modify-write like ``obj.count += 1`` is three bytecodes and the
interpreter can switch threads between them, silently losing updates.
Counters that must not lose increments route the read-modify-write through
a fixed table of locks striped by object identity: no per-object lock
allocation, and two objects sharing a stripe merely contend, never corrupt.
"""

import threading

_STRIPE_BITS = 10
_STRIPE_MASK = (1 << _STRIPE_BITS) - 1
_STRIPES = tuple(threading.Lock() for _ in range(1 << _STRIPE_BITS))


def stripe_for(obj) -> threading.Lock:
    """The stripe lock for obj. CPython objects are >= 16-byte aligned, so
    the low 4 id bits carry no entropy and are dropped."""
    return _STRIPES[(id(obj) >> 4) & _STRIPE_MASK]
