"""Reproducible random streams and worker-count handling.

Stream ``i`` under master seed ``s`` is numpy's Philox-4x64 counter generator
keyed by the pair (s, i), so every path or realization owns an independent
stream that does not depend on how work is split between threads.
"""
import os

import numpy as np

_U64 = 1 << 64


def stream(master_seed: int, index: int) -> np.random.Generator:
    if not 0 <= master_seed < _U64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {master_seed}")
    if not 0 <= index < _U64:
        raise ValueError(f"stream index out of range: {index}")
    return np.random.Generator(np.random.Philox(key=np.array([master_seed, index], dtype=np.uint64)))


def worker_count(workers=None) -> int:
    """Explicit ``workers``, else $CQSIM_THREADS, else all cores."""
    if workers is None:
        env = os.environ.get("CQSIM_THREADS", "").strip()
        workers = int(env) if env else (os.cpu_count() or 1)
    workers = int(workers)
    if workers < 1:
        raise ValueError("worker count must be >= 1")
    return workers
