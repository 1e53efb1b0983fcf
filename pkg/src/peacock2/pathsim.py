"""Backend selection and threaded dispatch for the path kernels.

The compiled extension is preferred when importable; otherwise the numpy
fallback runs the same algorithm.  Both are bit-identical per sample, so
chunking across worker threads (or not chunking at all) cannot change any
output -- worker count only affects wall clock.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _pathsim_py as _py
from ._pathsim_py import (  # re-exported rng/helper surface (canonical)
    barrier_lookup, inv_norm_cdf, plog, sample_keys, stream_normal,
    stream_uniform,
)

try:  # pragma: no cover - depends on the build environment
    from . import _pathsim as _impl
except ImportError:  # pragma: no cover
    _impl = _py


def backend_name() -> str:
    return _impl.BACKEND


def available_backends() -> list[str]:
    return ["python"] if _impl is _py else ["compiled", "python"]


def _backend(name: str | None):
    if name in (None, "default"):
        return _impl
    if name == "python":
        return _py
    if name == "compiled":
        if _impl is _py:
            raise RuntimeError("compiled backend is not available")
        return _impl
    raise ValueError(f"unknown backend {name!r}")


def resolve_workers(workers: int | None) -> int:
    if workers is not None:
        return max(int(workers), 1)
    env = os.environ.get("PEACOCK_WORKERS")
    if env:
        return max(int(env), 1)
    return min(os.cpu_count() or 1, 8)


def _chunks(n: int, workers: int):
    step = (n + workers - 1) // workers
    return [(i, min(i + step, n)) for i in range(0, n, step)]


def _run_chunked(fn, n, workers, arrays, scalars):
    """Apply a stage kernel per chunk; identical output for any chunking."""
    if n == 0:
        return (np.zeros(0), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=bool))
    workers = min(workers, n)
    spans = _chunks(n, workers)
    outs = [None] * len(spans)

    def run(k):
        i0, i1 = spans[k]
        outs[k] = fn(*[a[i0:i1] for a in arrays], *scalars)

    if len(spans) == 1:
        run(0)
    else:
        with ThreadPoolExecutor(max_workers=len(spans)) as pool:
            list(pool.map(run, range(len(spans))))
    values = np.concatenate([o[0] for o in outs])
    stop_steps = np.concatenate([o[1] for o in outs])
    exhausted = np.concatenate([o[2] for o in outs])
    return values, stop_steps, exhausted


def run_barrier_stage(keys, j, b, s, steps, s_knots, x_knots, top, dt,
                      max_steps, use_bridge=True, workers=1, backend=None):
    impl = _backend(backend)
    if impl is _py:
        workers = 1  # threads cannot help the GIL-bound fallback
    return _run_chunked(impl.barrier_stage, keys.size, workers,
                        (keys, j, b, s, steps),
                        (np.ascontiguousarray(s_knots), np.ascontiguousarray(x_knots),
                         float(top), float(dt), int(max_steps), bool(use_bridge)))


def run_interval_stage(keys, j, b, steps, lo, hi, dt, max_steps,
                       workers=1, backend=None):
    impl = _backend(backend)
    if impl is _py:
        workers = 1
    return _run_chunked(impl.interval_stage, keys.size, workers,
                        (keys, j, b, steps),
                        (float(lo), float(hi), float(dt), int(max_steps)))
