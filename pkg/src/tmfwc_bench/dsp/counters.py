from __future__ import annotations

import threading
from collections.abc import Iterator
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, field


@dataclass
class OpCounts:
    """
    Exact operation tally for one instrumented region.

    - macs: multiply-accumulate operations on the signal path
    - transforms: frequency-domain transform invocations (one per transformed frame)
    """

    macs: int = 0
    transforms: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def add(self, *, macs: int = 0, transforms: int = 0) -> None:
        with self._lock:
            self.macs += int(macs)
            self.transforms += int(transforms)


_ACTIVE: ContextVar[OpCounts | None] = ContextVar("tmfwc_op_counts", default=None)


@contextmanager
def count_ops() -> Iterator[OpCounts]:
    counts = OpCounts()
    token = _ACTIVE.set(counts)
    try:
        yield counts
    finally:
        _ACTIVE.reset(token)


def record_macs(n: int) -> None:
    counts = _ACTIVE.get()
    if counts is not None:
        counts.add(macs=n)


def record_transforms(n: int = 1) -> None:
    counts = _ACTIVE.get()
    if counts is not None:
        counts.add(transforms=n)
