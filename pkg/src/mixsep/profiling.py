"""Lightweight wall-clock section timers for the RTF benchmark.

Disabled by default; when enabled, forward passes accumulate per-section
seconds into ``profiler.times``. The engine is eager, so a section's elapsed
time is the real compute time of the operations built inside it.
"""

import time
from collections import defaultdict
from contextlib import contextmanager


class Profiler:
    def __init__(self):
        self.enabled = False
        self.times = defaultdict(float)

    def reset(self):
        self.times.clear()

    @contextmanager
    def section(self, name):
        if not self.enabled:
            yield
            return
        start = time.perf_counter()
        try:
            yield
        finally:
            self.times[name] += time.perf_counter() - start

    @contextmanager
    def activated(self):
        self.enabled = True
        self.reset()
        try:
            yield self
        finally:
            self.enabled = False


profiler = Profiler()
