"""The Sparre Andersen rearrangement of a finite real sequence.

Given ``x_1..x_n`` with negative partial sums exactly at indices
``i_1 > ... > i_k``, the rearrangement lists ``x_{i_1}, ..., x_{i_k}``
followed by the remaining entries in their original order.  The first
(earliest) minimum of the partial sums ``s_0 = 0, s_1, ..., s_n`` of the
result sits at place ``k``.  Indices are 1-based throughout, matching
partial-sum numbering.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "negative_partial_sum_indices",
    "transform",
    "inverse_transform",
    "first_minimum_position",
]


def _as_sequence(seq) -> list[float]:
    vals = [float(x) for x in seq]
    if any(math.isnan(x) for x in vals):
        raise ValueError("sequence contains NaN")
    return vals


def _partial_sums(vals):
    out, s = [], 0.0
    for x in vals:
        s += x
        out.append(s)
    return out


def negative_partial_sum_indices(seq) -> list[int]:
    """1-based indices ``i`` with ``x_1 + ... + x_i < 0``, largest first."""
    sums = _partial_sums(_as_sequence(seq))
    return [i + 1 for i in range(len(sums) - 1, -1, -1) if sums[i] < 0]


def first_minimum_position(seq) -> int:
    """Smallest ``j`` in ``0..n`` with ``s_j = min(s_0, ..., s_n)``, ``s_0 = 0``."""
    sums = [0.0] + _partial_sums(_as_sequence(seq))
    return int(np.argmin(sums))


def transform(seq) -> list[float]:
    vals = _as_sequence(seq)
    idx = negative_partial_sum_indices(vals)
    chosen = set(idx)
    head = [vals[i - 1] for i in idx]
    rest = [x for i, x in enumerate(vals, start=1) if i not in chosen]
    return head + rest


def inverse_transform(seq) -> list[float]:
    """Undo :func:`transform`.

    ``k`` is read off as the first-minimum position.  The original sequence
    is the unique interleaving of ``y_k, ..., y_1`` (increasing index order)
    with ``y_{k+1}, ..., y_n`` in which exactly the entries taken from the
    first group close a negative partial sum.  A reachability table over
    ``(taken from head, taken from rest)`` finds it in ``O(k (n - k))``.
    Partial sums are accumulated in the candidate's own order, so the true
    preimage reproduces the forward computation bit for bit.
    """
    vals = _as_sequence(seq)
    n = len(vals)
    k = first_minimum_position(vals)
    if k == 0:
        return list(vals)
    head = vals[:k][::-1]
    rest = vals[k:]
    m = n - k
    # sums[a][b]: partial sum after a head entries and b rest entries along the
    # path found so far; None marks an unreachable state.
    sums = [[None] * (m + 1) for _ in range(k + 1)]
    came = [[None] * (m + 1) for _ in range(k + 1)]
    sums[0][0] = 0.0
    for a in range(k + 1):
        for b in range(m + 1):
            s = sums[a][b]
            if s is None:
                continue
            if a < k:
                t = s + head[a]
                if t < 0 and sums[a + 1][b] is None:
                    sums[a + 1][b], came[a + 1][b] = t, "h"
            if b < m:
                t = s + rest[b]
                if t >= 0 and sums[a][b + 1] is None:
                    sums[a][b + 1], came[a][b + 1] = t, "r"
    if sums[k][m] is None:
        raise ValueError("sequence is not in the image of the transform")
    out = []
    a, b = k, m
    while a or b:
        if came[a][b] == "h":
            a -= 1
            out.append(head[a])
        else:
            b -= 1
            out.append(rest[b])
    return out[::-1]
