"""Thread budget handling.

FRACVAR_THREADS (a positive integer) caps how many worker threads the suite
runners and the solver's replica probes may use. Results are always assembled
in submission order, so the thread count never changes any output.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

from .errors import InvalidParam

_ENV_VAR = "FRACVAR_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def thread_budget() -> int:
    """Return the parallelism cap: FRACVAR_THREADS if set, else cpu count."""
    raw = os.environ.get(_ENV_VAR)
    if raw is None:
        return max(1, os.cpu_count() or 1)
    try:
        value = int(raw)
    except ValueError:
        raise InvalidParam(f"{_ENV_VAR} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise InvalidParam(f"{_ENV_VAR} must be a positive integer, got {raw!r}")
    return value


def map_ordered(fn: Callable[[T], R], items: Sequence[T] | Iterable[T]) -> list[R]:
    """Apply fn to every item, possibly on a thread pool, preserving order."""
    items = list(items)
    workers = min(thread_budget(), max(1, len(items)))
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
