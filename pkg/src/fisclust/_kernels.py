"""Numba kernels for the hot loops of the splitting algorithm.

Both kernels read the full distance matrix through an index vector, so
recursive subsets never materialize restricted copies. The max-gap kernel
uses pigeonhole bucketing: with m+1 buckets over a row's value range the
largest adjacent gap in sorted order must straddle a bucket boundary, so
scanning bucket extrema finds it exactly in linear time. Results are
bit-identical to sorting each row and taking the first flat argmax of the
adjacent differences (lowest row, then lowest sorted position on ties).
"""

import numpy as np
from numba import njit

__all__ = ["max_gap_crack", "max_nn_distance_kernel"]


@njit(cache=True)
def max_gap_crack(dm, idx):
    """Largest adjacent gap over all sorted rows of dm restricted to idx.

    Returns ``(gap, local_row, sorted_pos, threshold)`` where threshold is
    the lower value of the gap pair. Requires ``len(idx) >= 2``.
    """
    m = idx.shape[0]
    best_gap = -1.0
    best_row = -1
    best_left = 0.0
    best_degenerate = False
    nb = m + 1
    bmin = np.empty(nb, np.float64)
    bmax = np.empty(nb, np.float64)
    for r in range(m):
        gi = idx[r]
        lo = np.inf
        hi = -np.inf
        for c in range(m):
            v = dm[gi, idx[c]]
            if v < lo:
                lo = v
            if v > hi:
                hi = v
        width = hi - lo
        if width <= 0.0:
            # All distances equal: every adjacent gap is 0, located at
            # sorted position 0 under the tie rule.
            if 0.0 > best_gap:
                best_gap = 0.0
                best_row = r
                best_left = lo
                best_degenerate = True
            continue
        inv = nb / width
        for b in range(nb):
            bmin[b] = np.inf
            bmax[b] = -np.inf
        for c in range(m):
            v = dm[gi, idx[c]]
            b = int((v - lo) * inv)
            if b > nb - 1:
                b = nb - 1
            if v < bmin[b]:
                bmin[b] = v
            if v > bmax[b]:
                bmax[b] = v
        prev_max = bmax[0]
        row_gap = 0.0
        row_left = lo
        for b in range(1, nb):
            if bmin[b] <= bmax[b]:
                g = bmin[b] - prev_max
                if g > row_gap:
                    row_gap = g
                    row_left = prev_max
                prev_max = bmax[b]
        if row_gap > best_gap:
            best_gap = row_gap
            best_row = r
            best_left = row_left
            best_degenerate = False
    pos = 0
    if best_row >= 0 and not best_degenerate:
        gi = idx[best_row]
        cnt = 0
        for c in range(m):
            if dm[gi, idx[c]] <= best_left:
                cnt += 1
        pos = cnt - 1
    return best_gap, best_row, pos, best_left


@njit(cache=True)
def max_nn_distance_kernel(dm, idx):
    """Max over points in idx of the distance to their nearest other point."""
    m = idx.shape[0]
    worst = -np.inf
    for r in range(m):
        gi = idx[r]
        nearest = np.inf
        for c in range(m):
            if c != r:
                v = dm[gi, idx[c]]
                if v < nearest:
                    nearest = v
        if nearest > worst:
            worst = nearest
    return worst
