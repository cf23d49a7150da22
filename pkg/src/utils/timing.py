#!/usr/bin/env python3
from __future__ import annotations

import time


class Stopwatch:
    """Wall-clock timer usable as a context manager."""

    def __init__(self) -> None:
        self._start = 0.0
        self._mark = 0.0
        self.elapsed = 0.0

    def __enter__(self) -> "Stopwatch":
        self._start = self._mark = time.perf_counter()
        return self

    def __exit__(self, *exc) -> None:
        self.elapsed = time.perf_counter() - self._start

    def lap(self) -> float:
        """Seconds since the previous lap, or since entry for the first one."""
        now = time.perf_counter()
        split, self._mark = now - self._mark, now
        return split
