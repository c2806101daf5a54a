"""Shared test helpers: geometric edge labelings and random expression maps."""

import numpy as np
import pytest

from fixsim.labeling import Labeling
from fixsim.mapspec import Bin, Call, MapSpec, Neg, Num, Var


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def edge_labeling(grid, labels_from_corner0):
    """Labeling of a 1-D grid given labels in geometric order, walking from
    corner e_0 = (m, 0) to corner e_1 = (0, m)."""
    assert grid.n == 1
    assert len(labels_from_corner0) == grid.num_vertices
    out = np.empty(grid.num_vertices, dtype=np.int64)
    for vid in range(grid.num_vertices):
        steps_from_corner0 = int(grid.vertex_coords[vid][1])
        out[vid] = labels_from_corner0[steps_from_corner0]
    return Labeling(grid, out)


def sign_change_count(labels_from_corner0):
    """Independent 1-D oracle: fully labeled cells are label alternations."""
    return sum(
        1
        for a, b in zip(labels_from_corner0, labels_from_corner0[1:])
        if a != b
    )


def random_expression_ast(n, rng, depth=0):
    roll = rng.random()
    if depth >= 3 or roll < 0.35:
        if rng.random() < 0.6:
            return Var(int(rng.integers(0, n + 1)))
        return Num(f"{rng.integers(1, 9)}.{rng.integers(0, 99):02d}")
    if roll < 0.8:
        op = rng.choice(["+", "-", "*"])
        return Bin(
            str(op),
            random_expression_ast(n, rng, depth + 1),
            random_expression_ast(n, rng, depth + 1),
        )
    if roll < 0.88:
        return Bin("^", random_expression_ast(n, rng, depth + 1),
                   Num(str(int(rng.integers(1, 4)))))
    if roll < 0.94:
        return Neg(random_expression_ast(n, rng, depth + 1))
    return Call(
        "min" if rng.random() < 0.5 else "max",
        (
            random_expression_ast(n, rng, depth + 1),
            random_expression_ast(n, rng, depth + 1),
        ),
    )


def random_expression_map(n, rng):
    components = tuple(random_expression_ast(n, rng) for _ in range(n + 1))
    return MapSpec(n=n, kind="expression", components=components)
