"""Finding and counting fully labeled cells.

Two strategies: an exhaustive scan over all m^n cells (default at desk
scale), and a door-to-door walk that enters the grid through boundary faces
of the bottom facet carrying labels {0, ..., n-1} and pivots from cell to
cell.  Trails through doors pair the boundary doors up; an odd number of
them guarantees some trail ends in a fully labeled cell.
"""

import numpy as np

from . import kernels
from .errors import SearchExhausted
from .simplex import decode_cell, path_vertices, pivot_cell


def fully_labeled_indices(grid, labeling):
    """Flat indices of all fully labeled cells, ascending."""
    mask = kernels.fully_labeled_mask(grid.cells, labeling.labels)
    return np.flatnonzero(mask)


def count_fully_labeled(grid, labeling, threads=1):
    """Exact count of fully labeled cells by exhaustive scan."""
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        bounds = np.linspace(0, grid.num_cells, threads + 1, dtype=np.int64)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = pool.map(
                lambda se: kernels.count_fully_labeled(
                    grid.cells[se[0] : se[1]], labeling.labels
                ),
                zip(bounds[:-1], bounds[1:]),
            )
            return int(sum(parts))
    return int(kernels.count_fully_labeled(grid.cells, labeling.labels))


def find_fully_labeled(grid, labeling, strategy="exhaustive"):
    """Some fully labeled cell (existence guaranteed for admissible labelings).

    `exhaustive` returns the lowest-index one; `path` walks door-to-door from
    the bottom facet and visits at most m^n cells.
    """
    if strategy == "exhaustive":
        idx = kernels.first_fully_labeled(grid.cells, labeling.labels)
        if idx < 0:
            raise SearchExhausted("no fully labeled cell; labeling inadmissible?")
        return grid.cell(idx)
    if strategy != "path":
        raise ValueError(f"unknown strategy {strategy!r}")
    return _door_to_door(grid, labeling)


def _cell_labels(grid, labeling, verts):
    ids = grid.vertex_ids(np.asarray(verts))
    return [int(l) for l in labeling.labels[ids]]


def _trail(grid, labeling, base, perm, t_in, steps):
    """Walk through doors from an entry face until a fully labeled cell or a
    boundary exit.  t_in is the path position of the vertex off the door."""
    n, m = grid.n, grid.m
    limit = grid.num_cells + 1
    while True:
        steps[0] += 1
        if steps[0] > limit + m ** max(n - 1, 0) + 1000:
            raise SearchExhausted("door walk exceeded the cell count; bug")
        verts = path_vertices(m, base, perm)
        labs = _cell_labels(grid, labeling, verts)
        d = labs[t_in]
        if d == n:
            return "cell", (base, perm)
        t_dup = next(t for t in range(n + 1) if t != t_in and labs[t] == d)
        piv = pivot_cell(m, base, perm, t_dup)
        if piv is None:
            door = frozenset(v for t, v in enumerate(verts) if t != t_dup)
            return "exit", door
        base, perm, t_in = piv


def _door_to_door(grid, labeling):
    n, m = grid.n, grid.m
    steps = [0]
    used = set()
    for face_index in range(m ** (n - 1)):
        fbase, fperm = decode_cell(n - 1, m, face_index)
        base = fbase + (0,)
        perm = fperm + (n - 1,)
        verts = path_vertices(m, base, perm)
        face = verts[:n]
        labs = _cell_labels(grid, labeling, face)
        if set(labs) != set(range(n)):
            continue
        key = frozenset(face)
        if key in used:
            continue
        used.add(key)
        status, payload = _trail(grid, labeling, base, perm, n, steps)
        if status == "cell":
            return grid.cell_from_key(*payload)
        used.add(payload)
    raise SearchExhausted("all boundary doors explored; labeling inadmissible?")
