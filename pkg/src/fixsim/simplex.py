"""Simplex points and the m-fold equal subdivision grid.

Points live in barycentric coordinates: n+1 nonnegative entries summing to 1.
The subdivision is the staircase (Kuhn-style) triangulation over the integer
lattice {v in Z^(n+1), v >= 0, sum v = m}: exactly m^n cells, C(m+n, n)
vertices, every edge of max-norm length 1/m.

Staircase coordinates: u[j] = sum of barycentric entries j+1..n, so
m >= u[0] >= ... >= u[n-1] >= 0 on the scaled lattice.  A cell is a pair
(base, perm): the integer base point plus the order in which the n staircase
coordinates are incremented along the cell's vertex path.  The flat cell
index packs the digits w[t] = base[perm[t]] in base m (most significant
first); decoding is a stable descending sort, so every index in [0, m^n) is
a valid cell and vice versa.

Everything here works in two numeric modes: float64, and exact Fraction
arithmetic when the input point carries Fraction/int coordinates.
"""

import json
import math
import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .errors import NotOnSimplex, ResourceLimit, WrongArity

DEFAULT_CELL_BUDGET = 10_000_000
_CHUNK = 1 << 18


def cell_budget():
    """Materialization budget in cells; FIXSIM_CELL_BUDGET overrides."""
    raw = os.environ.get("FIXSIM_CELL_BUDGET")
    if raw is None:
        return DEFAULT_CELL_BUDGET
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"FIXSIM_CELL_BUDGET must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ValueError("FIXSIM_CELL_BUDGET must be positive")
    return value


# ---------------------------------------------------------------------------
# points


@dataclass(frozen=True)
class BarycentricPoint:
    """A point of the n-simplex: n+1 nonnegative coordinates summing to 1."""

    coords: tuple
    exact: bool = False

    @property
    def n(self):
        return len(self.coords) - 1

    def as_array(self):
        return np.asarray([float(c) for c in self.coords], dtype=np.float64)

    def __iter__(self):
        return iter(self.coords)


def make_point(coords, n=None, exact=None):
    """Validate, clamp, and renormalize coordinates into a BarycentricPoint.

    Entries may dip to -1e-9 (clamped to 0) and the sum may be off by up to
    1e-9 (renormalized).  In exact mode the coordinates must already be
    nonnegative rationals summing to exactly 1.
    """
    coords = tuple(coords)
    if n is not None and len(coords) != n + 1:
        raise WrongArity(f"expected {n + 1} coordinates, got {len(coords)}")
    if len(coords) < 2:
        raise WrongArity("a simplex point needs at least 2 coordinates")
    if exact is None:
        exact = all(isinstance(c, (int, Fraction)) for c in coords)
    if exact:
        vals = tuple(Fraction(c) for c in coords)
        if any(v < 0 for v in vals):
            raise NotOnSimplex(f"negative coordinate in exact mode: {coords}")
        if sum(vals) != 1:
            raise NotOnSimplex(f"exact coordinates sum to {sum(vals)}, not 1")
        return BarycentricPoint(vals, exact=True)
    vals = [float(c) for c in coords]
    if min(vals) < -1e-9:
        raise NotOnSimplex(f"coordinate {min(vals)} below -1e-9")
    total = sum(vals)
    if abs(total - 1.0) > 1e-9:
        raise NotOnSimplex(f"coordinates sum to {total}, off by more than 1e-9")
    vals = [max(v, 0.0) for v in vals]
    total = sum(vals)
    return BarycentricPoint(tuple(v / total for v in vals), exact=False)


def max_norm_dist(a, b):
    """Max-norm distance between two coordinate sequences."""
    return max(abs(float(x) - float(y)) for x, y in zip(a, b))


def sample_points(n, count, rng):
    """Uniform sample of `count` points on the n-simplex, rows of an array."""
    return rng.dirichlet(np.ones(n + 1), size=count)


# ---------------------------------------------------------------------------
# lattice combinatorics


@dataclass(frozen=True)
class GridVertex:
    """Lattice vertex: n+1 nonnegative integers summing to m."""

    int_coords: tuple
    index: int
    m: int

    @property
    def carrier(self):
        return tuple(i for i, c in enumerate(self.int_coords) if c > 0)

    def embedded(self, exact=False):
        if exact:
            return tuple(Fraction(c, self.m) for c in self.int_coords)
        return np.asarray(self.int_coords, dtype=np.float64) / self.m


@dataclass(frozen=True)
class GridCell:
    """One small simplex: n+1 vertices in canonical (lexicographic) order.

    vertex_ids is None for cells of a virtual (non-materialized) grid.
    """

    index: int
    vertex_ids: tuple
    int_coords: tuple
    m: int

    @property
    def n(self):
        return len(self.int_coords) - 1

    def embedded(self, exact=False):
        if exact:
            return tuple(
                tuple(Fraction(c, self.m) for c in v) for v in self.int_coords
            )
        return np.asarray(self.int_coords, dtype=np.float64) / self.m

    def barycenter(self, exact=False):
        k = len(self.int_coords)
        if exact:
            verts = self.embedded(exact=True)
            coords = tuple(sum(v[i] for v in verts) / k for i in range(k))
            return BarycentricPoint(coords, exact=True)
        return make_point(self.embedded().mean(axis=0))


def bary_from_staircase(y, m):
    """Barycentric integer coordinates from staircase integers."""
    n = len(y)
    v = [m - y[0]]
    for i in range(1, n):
        v.append(y[i - 1] - y[i])
    v.append(y[n - 1])
    return tuple(v)


def path_vertices(m, base, perm):
    """The n+1 lattice vertices of cell (base, perm), in path order."""
    y = list(base)
    verts = [bary_from_staircase(y, m)]
    for j in perm:
        y[j] += 1
        verts.append(bary_from_staircase(y, m))
    return tuple(verts)


def valid_cell(m, base, perm):
    """Whether (base, perm) denotes a cell inside the simplex."""
    n = len(base)
    if base[0] > m - 1 or base[n - 1] < 0:
        return False
    pos = [0] * n
    for t, j in enumerate(perm):
        pos[j] = t
    for j in range(n - 1):
        d = base[j] - base[j + 1]
        if d < 0:
            return False
        if d == 0 and pos[j] > pos[j + 1]:
            return False
    return True


def encode_cell(m, base, perm):
    """Flat index of cell (base, perm); a plain Python int, never overflows."""
    c = 0
    for t in range(len(perm)):
        c = c * m + base[perm[t]]
    return c


def decode_cell(n, m, index):
    """Inverse of encode_cell."""
    w = [0] * n
    c = index
    for t in range(n - 1, -1, -1):
        w[t] = c % m
        c //= m
    order = sorted(range(n), key=lambda t: (-w[t], t))
    base = tuple(w[t] for t in order)
    perm = [0] * n
    for r, t in enumerate(order):
        perm[t] = r
    return base, tuple(perm)


def pivot_cell(m, base, perm, t):
    """Reflect cell (base, perm) through the face opposite path vertex t.

    Returns (base2, perm2, t_new) with t_new the path position of the vertex
    that replaced the dropped one, or None when the face lies on the simplex
    boundary.
    """
    n = len(base)
    base2 = list(base)
    if t == 0:
        base2[perm[0]] += 1
        perm2 = perm[1:] + (perm[0],)
        t_new = n
    elif t == n:
        base2[perm[n - 1]] -= 1
        perm2 = (perm[n - 1],) + perm[:-1]
        t_new = 0
    else:
        perm2 = list(perm)
        perm2[t - 1], perm2[t] = perm2[t], perm2[t - 1]
        perm2 = tuple(perm2)
        t_new = t
    base2 = tuple(base2)
    if not valid_cell(m, base2, perm2):
        return None
    return base2, perm2, t_new


def locate_lattice(n, m, coords, exact=False):
    """Find the cell of the scale-m subdivision containing a point.

    Returns (base, perm, weights, verts): the cell key, the path-order
    barycentric weights of the point with respect to the cell's vertices,
    and those vertices' integer coordinates in path order.  Exact mode keeps
    everything in Fractions.
    """
    if exact:
        coords = [Fraction(c) for c in coords]
        u = []
        acc = Fraction(0)
        for c in reversed(coords[1:]):
            acc += c
            u.append(acc)
        u.reverse()
        u = [m * x for x in u]
        base = [min(max(math.floor(x), 0), m - 1) for x in u]
        frac = [x - b for x, b in zip(u, base)]
        order = sorted(range(n), key=lambda j: (-frac[j], j))
        lam = [1 - frac[order[0]]]
        for r in range(n - 1):
            lam.append(frac[order[r]] - frac[order[r + 1]])
        lam.append(frac[order[n - 1]])
    else:
        arr = np.asarray([float(c) for c in coords], dtype=np.float64)
        u = m * np.cumsum(arr[:0:-1])[::-1]
        base = np.clip(np.floor(u).astype(np.int64), 0, m - 1)
        frac = u - base
        order = np.argsort(-frac, kind="stable")
        lam = np.empty(n + 1, dtype=np.float64)
        lam[0] = 1.0 - frac[order[0]]
        for r in range(n - 1):
            lam[r + 1] = frac[order[r]] - frac[order[r + 1]]
        lam[n] = frac[order[n - 1]]
        np.clip(lam, 0.0, None, out=lam)
        lam /= lam.sum()
        base = [int(b) for b in base]
        lam = list(lam)
    perm = tuple(int(j) for j in order)
    verts = path_vertices(m, tuple(base), perm)
    return tuple(base), perm, lam, verts


def locate_batch(n, m, points):
    """Vectorized float cell location for (B, n+1) rows of simplex points.

    Returns (weights, verts): path-order barycentric weights (B, n+1) and the
    matching lattice vertices (B, n+1, n+1) as integers.
    """
    x = np.asarray(points, dtype=np.float64)
    count = x.shape[0]
    u = m * np.cumsum(x[:, :0:-1], axis=1)[:, ::-1]
    base = np.clip(np.floor(u).astype(np.int64), 0, m - 1)
    frac = u - base
    order = np.argsort(-frac, axis=1, kind="stable")
    fsort = np.take_along_axis(frac, order, axis=1)
    lam = np.empty((count, n + 1), dtype=np.float64)
    lam[:, 0] = 1.0 - fsort[:, 0]
    if n > 1:
        lam[:, 1:n] = fsort[:, : n - 1] - fsort[:, 1:]
    lam[:, n] = fsort[:, n - 1]
    np.clip(lam, 0.0, None, out=lam)
    lam /= lam.sum(axis=1, keepdims=True)
    y = np.empty((count, n + 1, n), dtype=np.int64)
    y[:, 0, :] = base
    rows = np.arange(count)
    for t in range(n):
        y[:, t + 1, :] = y[:, t, :]
        y[rows, t + 1, order[:, t]] += 1
    return lam, kernels.staircase_to_bary(y, m)


# ---------------------------------------------------------------------------
# materialized grids


def pack_coords(coords, m):
    """Pack integer barycentric rows into sortable int64 keys (lex order)."""
    coords = np.asarray(coords, dtype=np.int64)
    radix = m + 1
    keys = coords[..., 0].astype(np.int64)
    for i in range(1, coords.shape[-1]):
        keys = keys * radix + coords[..., i]
    return keys


def unpack_key(key, n, m):
    radix = m + 1
    out = [0] * (n + 1)
    for i in range(n, -1, -1):
        out[i] = key % radix
        key //= radix
    return tuple(out)


class SubdivisionGrid:
    """Immutable m-fold subdivision of the n-simplex.

    vertex_coords: (V, n+1) int32, rows in lexicographic order.
    cells: (C, n+1) int32 vertex indices, each row sorted ascending
    (canonical), rows in flat cell-index order.
    """

    def __init__(self, n, m, vertex_coords, cells):
        self.n = n
        self.m = m
        self.vertex_coords = vertex_coords
        self.cells = cells
        self._keys = pack_coords(vertex_coords, m)
        self._embedded = None

    @property
    def num_vertices(self):
        return self.vertex_coords.shape[0]

    @property
    def num_cells(self):
        return self.cells.shape[0]

    def embedded_vertices(self):
        if self._embedded is None:
            self._embedded = self.vertex_coords.astype(np.float64) / self.m
        return self._embedded

    def vertex(self, i):
        return GridVertex(tuple(int(c) for c in self.vertex_coords[i]), int(i), self.m)

    def vertex_ids(self, coords):
        """Vertex indices for an (..., n+1) array of lattice coordinates."""
        keys = pack_coords(coords, self.m)
        ids = np.searchsorted(self._keys, keys)
        return ids.astype(np.int64)

    def cell(self, index):
        ids = self.cells[index]
        coords = tuple(tuple(int(c) for c in self.vertex_coords[i]) for i in ids)
        return GridCell(int(index), tuple(int(i) for i in ids), coords, self.m)

    def cell_from_key(self, base, perm):
        """GridCell for a (base, perm) pair of this grid."""
        verts = path_vertices(self.m, base, perm)
        order = sorted(range(len(verts)), key=lambda t: verts[t])
        coords = tuple(verts[t] for t in order)
        ids = tuple(int(i) for i in self.vertex_ids(np.asarray(coords)))
        return GridCell(encode_cell(self.m, base, perm), ids, coords, self.m)

    def locate_cell(self, point):
        """Cell containing the point plus barycentric weights, canonical order.

        Boundary points match several cells; the floor/stable-sort convention
        picks one deterministically.
        """
        exact = getattr(point, "exact", False)
        coords = point.coords if isinstance(point, BarycentricPoint) else point
        base, perm, lam, verts = locate_lattice(self.n, self.m, coords, exact=exact)
        order = sorted(range(len(verts)), key=lambda t: verts[t])
        coords_sorted = tuple(verts[t] for t in order)
        ids = tuple(int(i) for i in self.vertex_ids(np.asarray(coords_sorted)))
        cell = GridCell(encode_cell(self.m, base, perm), ids, coords_sorted, self.m)
        weights = [lam[t] for t in order]
        if not exact:
            weights = np.asarray(weights, dtype=np.float64)
        return cell, weights

    def diameter(self, exact=False):
        """Max-norm diameter of the cells: 1/m (every edge has that length)."""
        return Fraction(1, self.m) if exact else 1.0 / self.m

    def to_json_dict(self):
        return {
            "n": self.n,
            "m": self.m,
            "vertices": self.vertex_coords.tolist(),
            "cells": self.cells.tolist(),
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_json_dict(), **kwargs)

    @classmethod
    def from_json_dict(cls, data):
        grid = subdivide(int(data["n"]), int(data["m"]))
        if "vertices" in data:
            verts = np.asarray(data["vertices"], dtype=np.int64)
            if verts.shape != grid.vertex_coords.shape or not np.array_equal(
                verts, grid.vertex_coords
            ):
                raise NotOnSimplex("grid file vertices do not match the subdivision")
        if "cells" in data:
            cells = np.asarray(data["cells"], dtype=np.int64)
            if cells.shape != grid.cells.shape or not np.array_equal(cells, grid.cells):
                raise NotOnSimplex("grid file cells do not match the subdivision")
        return grid


def subdivide(n, m, budget=None):
    """Build the m-fold subdivision grid of the n-simplex.

    Exactly m^n cells and C(m+n, n) lattice vertices.  Raises ResourceLimit
    when the cell count exceeds the materialization budget.
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if m < 1:
        raise ValueError(f"subdivision count must be >= 1, got {m}")
    budget = cell_budget() if budget is None else budget
    num_cells = m**n
    if num_cells > budget:
        raise ResourceLimit(
            f"grid would have {num_cells} cells, over the budget of {budget}"
        )

    uniques = []
    for c0 in range(0, num_cells, _CHUNK):
        coords = kernels.decode_cells_range(n, m, c0, min(c0 + _CHUNK, num_cells))
        uniques.append(np.unique(pack_coords(coords, m)))
    vertex_keys = np.unique(np.concatenate(uniques))
    expected = math.comb(m + n, n)
    if vertex_keys.size != expected:
        raise AssertionError(
            f"subdivision produced {vertex_keys.size} vertices, expected {expected}"
        )

    cells = np.empty((num_cells, n + 1), dtype=np.int32)
    for c0 in range(0, num_cells, _CHUNK):
        c1 = min(c0 + _CHUNK, num_cells)
        coords = kernels.decode_cells_range(n, m, c0, c1)
        ids = np.searchsorted(vertex_keys, pack_coords(coords, m))
        cells[c0:c1] = np.sort(ids, axis=1)

    vertex_coords = np.empty((vertex_keys.size, n + 1), dtype=np.int32)
    radix = m + 1
    keys = vertex_keys.copy()
    for i in range(n, -1, -1):
        vertex_coords[:, i] = keys % radix
        keys //= radix
    return SubdivisionGrid(n, m, vertex_coords, cells)


def locate_cell(grid, point):
    """Module-level alias for SubdivisionGrid.locate_cell."""
    return grid.locate_cell(point)


def cell_diameter(grid, exact=False):
    """Max over cells of the max pairwise vertex distance; equals 1/m."""
    return grid.diameter(exact=exact)
