"""Per-application request quotas, fixed-window style."""

from __future__ import annotations

import threading
import time
from typing import Callable

DEFAULT_LIMIT = 1200
DEFAULT_WINDOW_SECONDS = 30.0


class FixedWindowLimiter:
    """Counts requests per key inside fixed windows of `window` seconds.

    The first request of a window starts it; request limit+1 within the
    same window is refused. The clock is injectable so tests can roll
    windows without sleeping.
    """

    def __init__(
        self,
        limit: int = DEFAULT_LIMIT,
        window: float = DEFAULT_WINDOW_SECONDS,
        clock: Callable[[], float] = time.monotonic,
    ) -> None:
        if limit < 1:
            raise ValueError("limit must be at least 1")
        if window <= 0:
            raise ValueError("window must be positive")
        self._limit = limit
        self._window = window
        self._clock = clock
        self._buckets: dict[str, tuple[float, int]] = {}
        self._lock = threading.Lock()

    @property
    def limit(self) -> int:
        return self._limit

    def allow(self, key: str) -> bool:
        """Account one request; True while the key is under its quota."""
        now = self._clock()
        with self._lock:
            start, count = self._buckets.get(key, (now, 0))
            if now - start >= self._window:
                start, count = now, 0
            if count >= self._limit:
                self._buckets[key] = (start, count)
                return False
            self._buckets[key] = (start, count + 1)
            return True

    def remaining(self, key: str) -> int:
        now = self._clock()
        with self._lock:
            start, count = self._buckets.get(key, (now, 0))
            if now - start >= self._window:
                return self._limit
            return max(0, self._limit - count)

    def reset(self, key: str | None = None) -> None:
        with self._lock:
            if key is None:
                self._buckets.clear()
            else:
                self._buckets.pop(key, None)
