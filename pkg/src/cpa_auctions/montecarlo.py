"""Block-parallel Monte Carlo driver.

Work is cut into fixed-size blocks; block ``i`` always draws from
``rng_stream(seed, i)``.  Partial sums are reduced with ``math.fsum`` in block
order, so results are bit-identical whatever the worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .distributions import rng_stream

BLOCK_SIZE = 1 << 17


def default_workers() -> int:
    return os.cpu_count() or 1


def block_sizes(total: int, block_size: int = BLOCK_SIZE) -> list[int]:
    total = int(total)
    if total < 0:
        raise ValueError("total must be >= 0")
    full, rest = divmod(total, block_size)
    return [block_size] * full + ([rest] if rest else [])


def run_blocks(kernel, total, seed, workers=None, block_size=BLOCK_SIZE):
    """Call ``kernel(rng, size)`` once per block; return results in block order.

    ``kernel`` must return a 1-D array (or sequence) of partial sums.
    """
    sizes = block_sizes(total, block_size)
    workers = workers or default_workers()

    def one(i):
        return np.asarray(kernel(rng_stream(seed, i), sizes[i]), dtype=float)

    if workers == 1 or len(sizes) <= 1:
        return [one(i) for i in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(len(sizes))))


def reduce_sums(parts) -> np.ndarray:
    """Exactly-rounded columnwise sum of the block partials."""
    if not parts:
        return np.zeros(0)
    stacked = np.vstack(parts)
    return np.array([math.fsum(col) for col in stacked.T])


def ratio_with_se(sum_num, sum_den, sum_num2, sum_den2, sum_cross, count):
    """Ratio of sums and its delta-method standard error.

    The per-sample terms are (num_i, den_i); the error is that of
    ``mean(num) / mean(den)``.
    """
    if sum_den == 0:
        return math.nan, math.nan
    ratio = sum_num / sum_den
    mean_den = sum_den / count
    resid2 = (sum_num2 - 2.0 * ratio * sum_cross + ratio * ratio * sum_den2) / count
    if count > 1:
        resid2 *= count / (count - 1.0)
    se = math.sqrt(max(resid2, 0.0) / count) / abs(mean_den)
    return float(ratio), float(se)


def mean_with_se(total, total_sq, count):
    if count == 0:
        return math.nan, math.nan
    mean = total / count
    var = max(total_sq / count - mean * mean, 0.0)
    if count > 1:
        var *= count / (count - 1.0)
    return float(mean), math.sqrt(var / count)
