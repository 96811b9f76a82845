"""
Wall-clock timing helpers for cost reports.
"""

import statistics
import threading
import time
from contextlib import contextmanager
from typing import Callable, Iterator, Tuple, TypeVar

T = TypeVar('T')

_exclusive_lock = threading.RLock()


@contextmanager
def exclusive_section(enabled: bool = True) -> Iterator[None]:
    """
    Serialize sections across worker threads when enabled.

    The runner holds this around a whole (model, seed) cell, so training,
    evaluation and writing of one cell never overlap another cell. The lock is
    reentrant; nested sections in the same thread do not block.
    """
    if not enabled:
        yield
        return
    with _exclusive_lock:
        yield


def time_call(func: Callable[[], T], repeats: int = 1) -> Tuple[float, T]:
    """
    Time a call.

    Args:
        func: Zero-argument callable
        repeats: Number of timed runs

    Returns:
        (median seconds over the runs, result of the last run)
    """
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    durations = []
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = func()
        durations.append(time.perf_counter() - start)
    return statistics.median(durations), result  # type: ignore[return-value]
