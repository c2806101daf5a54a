"""Pure-numpy implementations of the hot kernels.

Used directly when FIXSIM_KERNELS=numpy (or numba is unavailable); also the
reference the numba kernels are tested against.

Cell encoding: a cell of the m-fold staircase subdivision in dimension n is a
pair (base, perm) — a base point in staircase coordinates plus the order in
which the n coordinates are incremented along the cell's vertex path.  The
flat index packs the digits w[i] = base[perm[i]] in base m, most significant
first; decoding is a stable descending sort of the digits.
"""

import numpy as np


def decode_cells_range(n, m, c0, c1):
    """Vertex lattice coordinates for cells c0..c1-1.

    Returns int64 array of shape (c1-c0, n+1, n+1): for each cell its n+1
    vertices in path order, each as n+1 barycentric integers summing to m.
    """
    c = np.arange(c0, c1, dtype=np.int64)
    count = c.size
    w = np.empty((count, n), dtype=np.int64)
    t = c
    for i in range(n - 1, -1, -1):
        w[:, i] = t % m
        t = t // m
    # stable descending sort recovers (base, perm); ties keep original order,
    # which is exactly the staircase compatibility condition
    order = np.argsort(-w, axis=1, kind="stable")
    base = np.take_along_axis(w, order, axis=1)
    perm = np.empty_like(order)
    np.put_along_axis(perm, order, np.broadcast_to(np.arange(n), (count, n)), axis=1)
    # walk the path in staircase coordinates
    y = np.empty((count, n + 1, n), dtype=np.int64)
    y[:, 0, :] = base
    rows = np.arange(count)
    for t_step in range(n):
        y[:, t_step + 1, :] = y[:, t_step, :]
        y[rows, t_step + 1, perm[:, t_step]] += 1
    return staircase_to_bary(y, m)


def staircase_to_bary(y, m):
    """Convert staircase integer coordinates (..., n) to barycentric (..., n+1)."""
    n = y.shape[-1]
    v = np.empty(y.shape[:-1] + (n + 1,), dtype=np.int64)
    v[..., 0] = m - y[..., 0]
    for i in range(1, n):
        v[..., i] = y[..., i - 1] - y[..., i]
    v[..., n] = y[..., n - 1]
    return v


def fully_labeled_mask(cells, labels):
    """Boolean mask over cells whose vertex labels cover {0, ..., n}."""
    n_plus_1 = cells.shape[1]
    bits = np.left_shift(np.int64(1), labels[cells])
    mask = np.bitwise_or.reduce(bits, axis=1)
    return mask == (np.int64(1) << n_plus_1) - 1


def count_fully_labeled(cells, labels):
    return int(np.count_nonzero(fully_labeled_mask(cells, labels)))


def first_fully_labeled(cells, labels):
    """Index of the first fully labeled cell, or -1."""
    mask = fully_labeled_mask(cells, labels)
    idx = int(np.argmax(mask))
    return idx if mask[idx] else -1
