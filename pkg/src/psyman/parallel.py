"""Worker-thread budget shared by parallelizable loops.

PSYMAN_THREADS caps the number of worker threads; 0 or unset means one
worker per CPU. Results never depend on the worker count because parallel
sections only ever write disjoint output slots.
"""

from __future__ import annotations

import os


def worker_count() -> int:
    raw = os.environ.get("PSYMAN_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    auto = os.cpu_count() or 1
    if cap <= 0:
        return auto
    return min(cap, auto)
