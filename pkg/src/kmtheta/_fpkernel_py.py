"""Pure-Python versions of the enumeration kernels in _fpkernel.pyx.

Same contract; the innermost coordinate is handled with numpy.
"""

from __future__ import annotations

import math
from collections import Counter

import numpy as np


def _levels(R: np.ndarray):
    diag2 = np.diag(R) ** 2
    mu = np.triu(R / np.diag(R)[:, None], 1)
    return diag2, mu


def _walk(R: np.ndarray, bound: float, center: np.ndarray):
    """Yield (prefix y_1..y_{k-1}, array of y_0 values) blocks."""
    k = R.shape[0]
    diag2, mu = _levels(R)
    z = np.zeros(k)
    y = [0] * k

    def rec(i: int, rem: float):
        s = -float(mu[i, i + 1:] @ z[i + 1:]) if i + 1 < k else 0.0
        r = math.sqrt(rem / diag2[i]) if rem > 0 else 0.0
        lo = math.ceil(s - center[i] - r)
        hi = math.floor(s - center[i] + r)
        if i == 0:
            if hi < lo:
                return
            cand = np.arange(lo, hi + 1)
            d = cand + center[0] - s
            keep = rem - diag2[0] * d * d >= 0
            if keep.any():
                yield tuple(y[1:]), cand[keep]
            return
        for yi in range(lo, hi + 1):
            zi = yi + center[i]
            left = rem - diag2[i] * (zi - s) ** 2
            if left < 0:
                continue
            y[i] = yi
            z[i] = zi
            yield from rec(i - 1, left)
        z[i] = 0.0

    yield from rec(k - 1, bound)


def enumerate_ball(R, bound: float, center, limit: int = -1) -> np.ndarray:
    R = np.ascontiguousarray(R, dtype=float)
    center = np.ascontiguousarray(center, dtype=float)
    k = R.shape[0]
    blocks = []
    count = 0
    for prefix, first in _walk(R, bound, center):
        blk = np.empty((len(first), k), dtype=np.int64)
        blk[:, 0] = first
        blk[:, 1:] = prefix
        blocks.append(blk)
        count += len(first)
        if 0 <= limit < count:
            raise OverflowError("enumeration limit exceeded")
    if not blocks:
        return np.zeros((0, k), dtype=np.int64)
    return np.concatenate(blocks)


def histogram_ball(R, bound: float, gram_int) -> dict:
    R = np.ascontiguousarray(R, dtype=float)
    G = np.asarray(gram_int, dtype=np.int64)
    k = R.shape[0]
    counts: Counter = Counter()
    for prefix, first in _walk(R, bound, np.zeros(k)):
        rest = np.array(prefix, dtype=np.int64)
        const = int(rest @ G[1:, 1:] @ rest) if k > 1 else 0
        lin = 2 * int(G[0, 1:] @ rest) if k > 1 else 0
        vals = G[0, 0] * first * first + lin * first + const
        counts.update(vals.tolist())
    return dict(counts)
