"""Injectable time sources.

Traces stamp their result envelopes, the geolocation rate limiter and the
crawler politeness delay all go through a Clock, so fixture-driven runs are
fully deterministic (including byte-identical exports).
"""

from __future__ import annotations

import threading
import time
from datetime import datetime, timedelta, timezone
from typing import Protocol


class Clock(Protocol):
    def now(self) -> datetime: ...

    def monotonic(self) -> float: ...

    def sleep(self, seconds: float) -> None: ...


def truncate_to_millis(dt: datetime) -> datetime:
    """Drop sub-millisecond precision; envelopes serialize at ms resolution."""
    return dt.replace(microsecond=(dt.microsecond // 1000) * 1000)


class SystemClock:
    """Wall clock; ``now()`` is UTC truncated to milliseconds."""

    def now(self) -> datetime:
        return truncate_to_millis(datetime.now(timezone.utc))

    def monotonic(self) -> float:
        return time.monotonic()

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)


class VirtualClock:
    """Deterministic clock: ``sleep`` advances time instead of waiting.

    Thread-safe; two clocks built from the same epoch tick identically for
    the same sequence of sleeps, which is what makes repeated fixture runs
    byte-identical.
    """

    DEFAULT_EPOCH = datetime(2014, 6, 13, 12, 0, 0, tzinfo=timezone.utc)

    def __init__(self, epoch: datetime | None = None):
        self._epoch = epoch or self.DEFAULT_EPOCH
        self._elapsed = 0.0
        self._lock = threading.Lock()

    def now(self) -> datetime:
        with self._lock:
            return truncate_to_millis(self._epoch + timedelta(seconds=self._elapsed))

    def monotonic(self) -> float:
        with self._lock:
            return self._elapsed

    def sleep(self, seconds: float) -> None:
        if seconds <= 0:
            return
        with self._lock:
            self._elapsed += seconds

    def advance(self, seconds: float) -> None:
        self.sleep(seconds)
