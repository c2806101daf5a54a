"""Vertex labelings: admissibility checking and map-induced labels.

A labeling assigns every grid vertex a label in {0, ..., n}.  Admissibility
means each vertex's label picks a coordinate that is positive there (the
carrier condition); corners are then forced to their own index and face
vertices to indices of that face's spanning corners.  Interior vertices are
unconstrained beyond the label range.
"""

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, MapRangeError
from .simplex import SubdivisionGrid, subdivide

_RANGE_TOL = 1e-9


@dataclass(frozen=True)
class Violation:
    vertex_index: int
    int_coords: tuple
    label: int
    reason: str


class Labeling:
    """Total assignment grid vertex -> {0, ..., n}."""

    def __init__(self, grid, labels):
        self.grid = grid
        self.labels = np.asarray(labels, dtype=np.int64)
        if self.labels.shape != (grid.num_vertices,):
            raise InvalidInput(
                f"labeling needs {grid.num_vertices} labels, got {self.labels.shape}"
            )

    def label_of(self, vertex_index):
        return int(self.labels[vertex_index])

    def to_json_dict(self):
        return {
            "n": self.grid.n,
            "m": self.grid.m,
            "labels": [
                {"v": [int(c) for c in self.grid.vertex_coords[i]], "l": int(l)}
                for i, l in enumerate(self.labels)
            ],
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_json_dict(), **kwargs)

    @classmethod
    def from_json_dict(cls, data, grid=None):
        try:
            n, m = int(data["n"]), int(data["m"])
            entries = data["labels"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed labeling data: {exc}") from exc
        if grid is None:
            grid = subdivide(n, m)
        elif (grid.n, grid.m) != (n, m):
            raise InvalidInput("labeling dimensions do not match the grid")
        labels = np.full(grid.num_vertices, -1, dtype=np.int64)
        for entry in entries:
            coords = np.asarray(entry["v"], dtype=np.int64)
            if coords.shape != (n + 1,) or coords.min() < 0 or coords.sum() != m:
                raise InvalidInput(f"bad vertex in labeling file: {entry['v']}")
            vid = int(grid.vertex_ids(coords[None, :])[0])
            if vid >= grid.num_vertices or not np.array_equal(
                grid.vertex_coords[vid], coords
            ):
                raise InvalidInput(f"unknown vertex in labeling file: {entry['v']}")
            if labels[vid] != -1:
                raise InvalidInput(f"vertex labeled twice: {entry['v']}")
            label = int(entry["l"])
            labels[vid] = label
        if (labels == -1).any():
            missing = int(np.count_nonzero(labels == -1))
            raise InvalidInput(f"labeling file leaves {missing} vertices unlabeled")
        return cls(grid, labels)


def check_admissible(grid, labeling):
    """All rule violations of a labeling; empty list means admissible.

    The carrier condition (the labeled coordinate is positive at the vertex)
    is equivalent to the corner and face rules together; interior vertices
    only need a label in range.
    """
    labels = labeling.labels
    violations = []
    in_range = (labels >= 0) & (labels <= grid.n)
    for i in np.flatnonzero(~in_range):
        violations.append(
            Violation(
                int(i),
                tuple(int(c) for c in grid.vertex_coords[i]),
                int(labels[i]),
                f"label outside 0..{grid.n}",
            )
        )
    ok_rows = np.flatnonzero(in_range)
    picked = grid.vertex_coords[ok_rows, labels[ok_rows]]
    for i, coord in zip(ok_rows, picked):
        if coord <= 0:
            violations.append(
                Violation(
                    int(i),
                    tuple(int(c) for c in grid.vertex_coords[i]),
                    int(labels[i]),
                    "labeled coordinate is zero (label not in the vertex carrier)",
                )
            )
    violations.sort(key=lambda v: v.vertex_index)
    return violations


def batch_eval(f, points):
    if hasattr(f, "eval_batch"):
        return f.eval_batch(points)
    return np.stack([np.asarray(f(row), dtype=np.float64) for row in points])


def check_map_range(values):
    """Raise MapRangeError unless every row is on the simplex (float tol)."""
    if not np.all(np.isfinite(values)):
        raise MapRangeError("map produced non-finite coordinates")
    if values.min() < -_RANGE_TOL:
        raise MapRangeError(f"map produced coordinate {values.min()}")
    sums = values.sum(axis=1)
    worst = np.abs(sums - 1.0).max()
    if worst > _RANGE_TOL:
        raise MapRangeError(f"map output sums deviate from 1 by {worst}")


def induced_labels_from_values(int_coords, embedded, values):
    """Standard induced labels: smallest i with v_i > 0 and f_i(v) <= v_i.

    Such an index exists because both coordinate sums equal 1; under float
    rounding a row may momentarily have none, in which case the most
    decreasing carrier coordinate is used (still admissible).
    """
    carrier = np.asarray(int_coords) > 0
    qualifies = carrier & (values <= embedded)
    labels = np.argmax(qualifies, axis=1).astype(np.int64)
    bad = ~qualifies.any(axis=1)
    if np.any(bad):
        slack = np.where(carrier[bad], values[bad] - embedded[bad], np.inf)
        labels[bad] = np.argmin(slack, axis=1)
    return labels


def labels_for_coords(f, int_coords, m):
    """Induced labels for an (B, n+1) block of lattice vertices."""
    embedded = np.asarray(int_coords, dtype=np.float64) / m
    values = batch_eval(f, embedded)
    check_map_range(values)
    return induced_labels_from_values(int_coords, embedded, values)


def label_from_function(grid, f, exact=False, threads=1):
    """Label every grid vertex from a self-map of the simplex.

    The result always satisfies check_admissible: the chosen coordinate is
    positive at the vertex, and f_label(v) <= v_label.
    """
    if exact:
        labels = np.empty(grid.num_vertices, dtype=np.int64)
        for i in range(grid.num_vertices):
            v = grid.vertex(i)
            emb = v.embedded(exact=True)
            img = f.eval_exact(emb)
            if sum(img) != 1 or any(c < 0 for c in img):
                raise MapRangeError(f"exact map output off the simplex at {emb}")
            labels[i] = next(
                j for j in range(grid.n + 1) if emb[j] > 0 and img[j] <= emb[j]
            )
        return Labeling(grid, labels)
    coords = grid.vertex_coords
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        chunks = np.array_split(np.arange(grid.num_vertices), threads)
        labels = np.empty(grid.num_vertices, dtype=np.int64)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = pool.map(
                lambda idx: labels_for_coords(f, coords[idx], grid.m), chunks
            )
            for idx, part in zip(chunks, parts):
                labels[idx] = part
        return Labeling(grid, labels)
    return Labeling(grid, labels_for_coords(f, coords, grid.m))


def is_fully_labeled(cell, labeling):
    """True iff the cell's n+1 vertex labels are exactly {0, ..., n}."""
    if cell.vertex_ids is not None:
        labs = labeling.labels[list(cell.vertex_ids)]
    else:
        ids = labeling.grid.vertex_ids(np.asarray(cell.int_coords))
        labs = labeling.labels[ids]
    mask = 0
    for l in labs:
        mask |= 1 << int(l)
    return mask == (1 << len(cell.int_coords)) - 1


def random_labeling(grid, rng):
    """Uniform random admissible labeling: each vertex draws from its carrier."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    positive = grid.vertex_coords > 0
    counts = positive.sum(axis=1)
    r = rng.integers(0, counts)
    cum = positive.cumsum(axis=1)
    labels = np.argmax(cum > r[:, None], axis=1).astype(np.int64)
    return Labeling(grid, labels)


def enumerate_labelings(grid):
    """All admissible labelings, lexicographic in the per-vertex carrier choices.

    Count grows as the product of carrier sizes; intended for tiny grids.
    """
    carriers = [
        tuple(int(j) for j in np.flatnonzero(grid.vertex_coords[i] > 0))
        for i in range(grid.num_vertices)
    ]
    for choice in itertools.product(*carriers):
        yield Labeling(grid, np.asarray(choice, dtype=np.int64))
