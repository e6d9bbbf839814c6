"""
Kernelized Stein discrepancy with the inverse multiquadric base kernel
k(x, y) = (c^2 + ||x - y||^2)^beta.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from itertools import chain

import numpy as np

from apps.core.exceptions import InvalidParameterError, NumericsError
from apps.core.utils import tmula_setting

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE = 128


def imq_stein_kernel(x, y, score_x, score_y, c=1.0, beta=-0.5):
    """Stein kernel matrix k0(x_i, y_j) of shape (n_x, n_y)."""
    dim = x.shape[-1]
    diff = x[:, None, :] - y[None, :, :]
    dist_sq = np.sum(diff**2, axis=-1)
    base = c**2 + dist_sq
    kernel = base**beta
    trace_term = -2.0 * beta * (dim * base ** (beta - 1) + 2.0 * (beta - 1) * dist_sq * base ** (beta - 2))
    score_diff = score_y[None, :, :] - score_x[:, None, :]
    cross = 2.0 * beta * base ** (beta - 1) * np.sum(diff * score_diff, axis=-1)
    score_dot = np.sum(score_x[:, None, :] * score_y[None, :, :], axis=-1)
    return trace_term + cross + kernel * score_dot


def ksd(points, score, c=None, beta=None, u_statistic=False, block_size=DEFAULT_BLOCK_SIZE, jobs=1):
    """
    KSD of ``points`` against the density with score function ``score`` (or precomputed
    scores of the same shape as ``points``).

    The V-statistic (1/n^2) sum_ij k0(x_i, x_j) is used by default; ``u_statistic`` drops the
    diagonal and divides by n(n-1). The square root of the clipped estimate is returned.
    Each kernel row is summed in sorted order and the row sums are added exactly, so the value
    does not depend on the point order, the block size or ``jobs``.
    """
    c = float(tmula_setting("KSD_C", c))
    beta = float(tmula_setting("KSD_BETA", beta))
    if c <= 0 or beta >= 0:
        raise InvalidParameterError(f"IMQ kernel needs c > 0 and beta < 0, got c={c}, beta={beta}")
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] < (2 if u_statistic else 1):
        raise InvalidParameterError(f"KSD needs an (n, d) array of points, got shape {points.shape}")
    scores = np.asarray(score(points) if callable(score) else score, dtype=float)
    if scores.shape != points.shape:
        raise InvalidParameterError(f"Scores have shape {scores.shape}, expected {points.shape}")
    bad = np.flatnonzero(~np.all(np.isfinite(scores), axis=-1))
    if bad.size:
        raise NumericsError(f"Nonfinite score at point {int(bad[0])}")

    n = points.shape[0]
    starts = list(range(0, n, block_size))

    def block_values(start):
        stop = min(start + block_size, n)
        block = imq_stein_kernel(points[start:stop], points, scores[start:stop], scores, c, beta)
        if u_statistic:
            block[np.arange(stop - start), np.arange(start, stop)] = 0.0
        return np.sum(np.sort(block, axis=1), axis=1).tolist()

    def blocks():
        if jobs > 1 and len(starts) > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                # one wave of blocks in memory at a time
                for wave in range(0, len(starts), jobs):
                    yield from pool.map(block_values, starts[wave : wave + jobs])
        else:
            for start in starts:
                yield block_values(start)

    normalizer = n * (n - 1) if u_statistic else n * n
    value = math.fsum(chain.from_iterable(blocks())) / normalizer
    return float(np.sqrt(max(value, 0.0)))


def ksd_series(points, score, sizes, **kwargs):
    """KSD of the first n points for each n in ``sizes``; scores are evaluated once."""
    points = np.asarray(points, dtype=float)
    scores = np.asarray(score(points) if callable(score) else score, dtype=float)
    series = []
    for size in sizes:
        size = int(size)
        if not 1 <= size <= points.shape[0]:
            raise InvalidParameterError(f"KSD series size {size} outside 1..{points.shape[0]}")
        series.append((size, ksd(points[:size], scores[:size], **kwargs)))
    logger.debug(f"KSD series over {len(series)} sizes, final value {series[-1][1]:.6g}")
    return series
