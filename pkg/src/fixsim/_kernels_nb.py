"""Numba @njit implementations of the hot kernels.

Loop-level twins of _kernels_np; the dispatcher in kernels.py picks between
the two.  Import fails cleanly when numba is not installed.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def decode_cells_range(n, m, c0, c1):
    count = c1 - c0
    out = np.empty((count, n + 1, n + 1), dtype=np.int64)
    w = np.empty(n, dtype=np.int64)
    base = np.empty(n, dtype=np.int64)
    perm = np.empty(n, dtype=np.int64)
    y = np.empty(n, dtype=np.int64)
    for row in range(count):
        c = c0 + row
        for i in range(n - 1, -1, -1):
            w[i] = c % m
            c //= m
        # stable descending selection sort of the digits
        taken = np.zeros(n, dtype=np.int64)
        for j in range(n):
            best = -1
            for i in range(n):
                if taken[i] == 0 and (best < 0 or w[i] > w[best]):
                    best = i
            taken[best] = 1
            base[j] = w[best]
            perm[best] = j
        for j in range(n):
            y[j] = base[j]
        for t in range(n + 1):
            out[row, t, 0] = m - y[0]
            for i in range(1, n):
                out[row, t, i] = y[i - 1] - y[i]
            out[row, t, n] = y[n - 1]
            if t < n:
                y[perm[t]] += 1
    return out


@njit(cache=True)
def count_fully_labeled(cells, labels):
    n_cells, n_plus_1 = cells.shape
    full = (np.int64(1) << n_plus_1) - 1
    total = 0
    for c in range(n_cells):
        mask = np.int64(0)
        for t in range(n_plus_1):
            mask |= np.int64(1) << labels[cells[c, t]]
        if mask == full:
            total += 1
    return total


@njit(cache=True)
def first_fully_labeled(cells, labels):
    n_cells, n_plus_1 = cells.shape
    full = (np.int64(1) << n_plus_1) - 1
    for c in range(n_cells):
        mask = np.int64(0)
        for t in range(n_plus_1):
            mask |= np.int64(1) << labels[cells[c, t]]
        if mask == full:
            return c
    return -1


def fully_labeled_mask(cells, labels):
    # mask output is only needed at materialized scale; the numpy version is
    # already vectorized there
    from . import _kernels_np

    return _kernels_np.fully_labeled_mask(cells, labels)
