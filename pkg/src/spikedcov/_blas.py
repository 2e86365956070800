"""BLAS thread control for the small-matrix hot loops.

Draw loops operate on matrices far too small for BLAS-internal threading to
pay off; on some hosts the synchronization overhead is catastrophic (>10x).
Parallelism in this package lives at the draw/replication/window level, so
the orchestrating entry points pin BLAS to one thread for their duration.
The context is reference-counted so nested or concurrent entries from worker
threads are safe.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover
    threadpool_limits = None

_lock = threading.Lock()
_depth = 0
_controller = None


@contextmanager
def single_threaded_blas():
    global _depth, _controller
    with _lock:
        _depth += 1
        if _depth == 1 and threadpool_limits is not None:
            _controller = threadpool_limits(limits=1, user_api="blas")
    try:
        yield
    finally:
        with _lock:
            _depth -= 1
            if _depth == 0 and _controller is not None:
                _controller.restore_original_limits()
                _controller = None
