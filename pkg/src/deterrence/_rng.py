"""Counter-based random substreams.

Every path gets its own Philox stream keyed by the run seed, with the path
index and a stream id placed in the high counter words.  Draws for path ``i``
therefore never depend on how paths are batched or scheduled.
"""
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

NOISE_STREAM = 0
MIXING_STREAM = 1

_MASK64 = (1 << 64) - 1


def path_generator(seed, path_index, stream=NOISE_STREAM):
    bitgen = np.random.Philox(key=int(seed) & ((1 << 128) - 1),
                              counter=[0, 0, int(path_index) & _MASK64, stream])
    return np.random.Generator(bitgen)


def normal_block(seed, start, stop, n_draws, stream=NOISE_STREAM):
    """Standard normals for paths ``start..stop-1``, one row per path."""
    out = np.empty((stop - start, n_draws))
    for row, i in enumerate(range(start, stop)):
        out[row] = path_generator(seed, i, stream).standard_normal(n_draws)
    return out


def uniform_block(seed, start, stop, n_draws, stream=MIXING_STREAM):
    out = np.empty((stop - start, n_draws))
    for row, i in enumerate(range(start, stop)):
        out[row] = path_generator(seed, i, stream).random(n_draws)
    return out


def resolve_threads(threads=None):
    """``threads`` argument, else ``DETERRENCE_THREADS``, else CPU count."""
    if threads is None or threads == 0:
        env = os.environ.get("DETERRENCE_THREADS", "")
        threads = int(env) if env.strip() else 0
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


CHUNK = 4096


def map_chunks(fn, n_items, threads=None, chunk=CHUNK):
    """Apply ``fn(start, stop)`` over fixed-size chunks; results in order.

    Chunk boundaries do not depend on the thread count.
    """
    bounds = [(s, min(s + chunk, n_items)) for s in range(0, n_items, chunk)]
    threads = resolve_threads(threads)
    if threads == 1 or len(bounds) <= 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ab: fn(*ab), bounds))
