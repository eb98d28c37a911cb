"""Thread-count policy shared by the library and the CLI."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "WASSPROJ_THREADS"


def thread_count(requested: int | None = None) -> int:
    """Workers to use: ``requested`` if given, else ``$WASSPROJ_THREADS``, else 1."""
    if requested is None:
        raw = os.environ.get(ENV_THREADS, "").strip()
        requested = int(raw) if raw.isdigit() else 1
    return max(1, int(requested))


def parallel_map(fn, items, workers: int | None = None) -> list:
    """Ordered map, threaded when more than one worker is allowed."""
    items = list(items)
    n = thread_count(workers)
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))
