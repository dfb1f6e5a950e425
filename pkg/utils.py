# utils.py
"""Shared plumbing: environment settings, the error base class, seeded
substreams, the chunked trial runner and JSON helpers for complex numbers."""
import os
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

VERSION = "0.3.1"

logger = logging.getLogger(__name__)


class FockPreserveError(Exception):
    """Base class for every error raised by the library."""


# --- Load env variables ---
try:
    THREADS = max(1, int(os.getenv("FOCK_PRESERVE_THREADS", "1")))
except Exception:
    THREADS = 1

try:
    DEFAULT_SEED = int(os.getenv("FOCK_PRESERVE_SEED", "42"))
except Exception:
    DEFAULT_SEED = 42

try:
    DEFAULT_TOL = float(os.getenv("FOCK_PRESERVE_TOL", "1e-9"))
    if not DEFAULT_TOL > 0:
        raise ValueError(DEFAULT_TOL)
except Exception:
    DEFAULT_TOL = 1e-9

try:
    ZERO_EPS = float(os.getenv("FOCK_PRESERVE_ZERO_EPS", "1e-14"))
except Exception:
    ZERO_EPS = 1e-14

LOG_LEVEL = os.getenv("FOCK_PRESERVE_LOG_LEVEL", "WARNING").upper()


def trial_rng(seed, trial, stream=None):
    """Generator for one Monte Carlo trial; depends only on (seed, trial, stream)."""
    key = [int(seed), int(trial)] if stream is None else [int(seed), int(trial), int(stream)]
    return np.random.default_rng(key)


def chunk_ranges(total, size):
    """Split range(total) into consecutive (start, stop) chunks."""
    size = max(1, int(size))
    return [(start, min(start + size, total)) for start in range(0, total, size)]


def first_hit(check_chunk, total, chunk_size=512, threads=None):
    """Run check_chunk(start, stop) over consecutive chunks and return the
    first non-None result in chunk order.

    Chunks are independent, so with several threads the scan runs in waves of
    `threads` chunks; the lowest chunk with a hit wins regardless of which
    worker finished first.
    """
    threads = THREADS if threads is None else max(1, int(threads))
    chunks = chunk_ranges(total, chunk_size)
    if threads == 1 or len(chunks) == 1:
        for start, stop in chunks:
            hit = check_chunk(start, stop)
            if hit is not None:
                return hit
        return None

    with ThreadPoolExecutor(max_workers=threads) as pool:
        for wave in range(0, len(chunks), threads):
            batch = chunks[wave:wave + threads]
            results = list(pool.map(lambda c: check_chunk(*c), batch))
            for hit in results:
                if hit is not None:
                    return hit
    return None


def complex_to_json(value):
    """{"re": x, "im": y} for a complex number (None passes through)."""
    if value is None:
        return None
    value = complex(value)
    return {"re": float(value.real), "im": float(value.imag)}


def complex_from_json(obj):
    """Accept {"re", "im"}, [re, im] or a plain number."""
    if isinstance(obj, dict):
        return complex(float(obj.get("re", 0.0)), float(obj.get("im", 0.0)))
    if isinstance(obj, (list, tuple)):
        if len(obj) != 2:
            raise FockPreserveError(f"complex literal needs two entries, got {obj!r}")
        return complex(float(obj[0]), float(obj[1]))
    return complex(obj)
