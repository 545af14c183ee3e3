"""Deterministic work meter.

Planning, reuse screening and reapplication charge one unit per elementary
operation (fact lookup, pattern match, mapping application, causal trigger
evaluation, ...).  Counts are exactly reproducible for identical inputs,
which is what the benchmark reports by default; wall-clock CPU timing is an
opt-in alternative.
"""

from __future__ import annotations

import time


class Meter:
    """Counts elementary planner operations."""

    __slots__ = ("count",)

    def __init__(self) -> None:
        self.count = 0

    def tick(self, n: int = 1) -> None:
        self.count += n


class CpuTimer:
    """Measures process CPU time in milliseconds between start/stop."""

    __slots__ = ("_start", "elapsed_ns")

    def __init__(self) -> None:
        self._start = 0
        self.elapsed_ns = 0

    def start(self) -> None:
        self._start = time.process_time_ns()

    def stop(self) -> None:
        self.elapsed_ns += time.process_time_ns() - self._start

    @property
    def milliseconds(self) -> int:
        return self.elapsed_ns // 1_000_000
