"""Tests for points, subdivision grids, and point location."""

import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fixsim import (
    NotOnSimplex,
    ResourceLimit,
    WrongArity,
    cell_diameter,
    locate_cell,
    make_point,
    subdivide,
)
from fixsim.simplex import (
    SubdivisionGrid,
    decode_cell,
    encode_cell,
    locate_batch,
    path_vertices,
    pivot_cell,
    valid_cell,
)


class TestMakePoint:
    def test_unit_vector(self):
        p = make_point((1, 0, 0))
        assert p.coords == (1, 0, 0)
        assert p.exact

    def test_barycenter_exact(self):
        p = make_point((Fraction(1, 3),) * 3)
        assert sum(p.coords) == 1

    def test_sum_violation(self):
        with pytest.raises(NotOnSimplex):
            make_point((0.5, 0.6, 0.1))

    def test_wrong_arity(self):
        with pytest.raises(WrongArity):
            make_point((0.5, 0.5), n=2)

    def test_negative_entry(self):
        with pytest.raises(NotOnSimplex):
            make_point((0.5, 0.6, -0.1))

    def test_tiny_negative_clamped(self):
        p = make_point((0.5, 0.5 + 1e-12, -1e-12))
        assert p.coords[2] == 0.0
        assert abs(sum(p.coords) - 1.0) < 1e-12

    def test_float_renormalized(self):
        p = make_point((0.2 + 3e-10, 0.3, 0.5))
        assert abs(sum(p.coords) - 1.0) < 1e-15

    def test_exact_must_be_exact(self):
        with pytest.raises(NotOnSimplex):
            make_point((Fraction(1, 2), Fraction(1, 2), Fraction(1, 100)))


def brute_force_vertex_count(n, m):
    """Enumerate integer tuples of length n+1 summing to m."""
    return sum(
        1
        for combo in itertools.product(range(m + 1), repeat=n)
        if sum(combo) <= m
    )


class TestSubdivide:
    @pytest.mark.parametrize("n,m", [(1, 1), (1, 7), (2, 1), (2, 4), (3, 3), (4, 2)])
    def test_counts(self, n, m):
        grid = subdivide(n, m)
        assert grid.num_cells == m**n
        assert grid.num_vertices == math.comb(m + n, n)

    def test_vertex_count_oracle_2_4(self):
        # direct enumeration of integer triples summing to 4
        grid = subdivide(2, 4)
        assert grid.num_vertices == brute_force_vertex_count(2, 4) == 15

    def test_trivial_grid(self):
        grid = subdivide(1, 1)
        assert grid.num_cells == 1
        assert grid.num_vertices == 2

    @pytest.mark.parametrize("n,m", [(2, 3), (3, 2), (1, 5)])
    def test_edge_lengths(self, n, m):
        # every pair of vertices in a cell differs by at most 1 per lattice
        # coordinate, with at least one pair achieving it
        grid = subdivide(n, m)
        for row in grid.cells:
            coords = grid.vertex_coords[row].astype(int)
            diffs = [
                np.abs(coords[a] - coords[b]).max()
                for a, b in itertools.combinations(range(n + 1), 2)
            ]
            assert max(diffs) == 1

    def test_cells_cover_every_vertex(self):
        grid = subdivide(2, 5)
        assert set(np.unique(grid.cells)) == set(range(grid.num_vertices))

    def test_budget(self):
        with pytest.raises(ResourceLimit):
            subdivide(3, 10, budget=500)

    def test_bad_args(self):
        with pytest.raises(ValueError):
            subdivide(0, 3)
        with pytest.raises(ValueError):
            subdivide(2, 0)

    def test_canonical_cell_vertex_order(self):
        grid = subdivide(2, 3)
        for row in grid.cells:
            keys = [tuple(grid.vertex_coords[i]) for i in row]
            assert keys == sorted(keys)


class TestDiameter:
    def brute_diameter(self, grid):
        worst = 0.0
        emb = grid.embedded_vertices()
        for row in grid.cells:
            pts = emb[row]
            for a, b in itertools.combinations(range(len(row)), 2):
                worst = max(worst, np.abs(pts[a] - pts[b]).max())
        return worst

    @pytest.mark.parametrize(
        "n,m,expected", [(2, 4, 0.25), (3, 1, 1.0), (2, 10, 0.1)]
    )
    def test_against_edge_enumeration(self, n, m, expected):
        grid = subdivide(n, m)
        assert cell_diameter(grid) == pytest.approx(expected)
        assert self.brute_diameter(grid) == pytest.approx(expected)

    def test_exact(self):
        assert cell_diameter(subdivide(2, 6), exact=True) == Fraction(1, 6)


class TestLocate:
    def test_cell_barycenters(self):
        grid = subdivide(2, 3)
        for ci in range(grid.num_cells):
            cell = grid.cell(ci)
            found, weights = grid.locate_cell(cell.barycenter())
            assert found.vertex_ids == cell.vertex_ids
            assert np.allclose(weights, 1.0 / 3.0)

    def test_grid_vertex_gets_unit_weight(self):
        grid = subdivide(2, 2)
        v = grid.vertex(3)
        cell, weights = grid.locate_cell(make_point(v.embedded()))
        at = cell.vertex_ids.index(3)
        assert weights[at] == pytest.approx(1.0)
        assert np.asarray(weights).sum() == pytest.approx(1.0)

    @pytest.mark.parametrize("n,m", [(1, 4), (2, 2), (2, 7), (3, 3)])
    def test_reconstruction_float(self, n, m, rng):
        grid = subdivide(n, m)
        pts = rng.dirichlet(np.ones(n + 1), size=250)
        for row in pts:
            p = make_point(row)
            cell, w = grid.locate_cell(p)
            rec = (np.asarray(w)[:, None] * cell.embedded()).sum(axis=0)
            assert np.abs(rec - p.as_array()).max() < 1e-10

    def test_reconstruction_exact(self, rng):
        grid = subdivide(2, 4)
        for _ in range(60):
            raw = [Fraction(int(a), 97) for a in rng.integers(0, 40, size=2)]
            third = 1 - sum(raw)
            if third < 0:
                continue
            p = make_point((raw[0], raw[1], third))
            cell, w = grid.locate_cell(p)
            emb = cell.embedded(exact=True)
            rec = tuple(
                sum(w[t] * emb[t][j] for t in range(3)) for j in range(3)
            )
            assert rec == p.coords
            assert sum(w) == 1 and all(x >= 0 for x in w)

    def test_interior_determinism(self, rng):
        grid = subdivide(2, 5)
        fresh = subdivide(2, 5)
        pts = rng.dirichlet(np.ones(3), size=100)
        for row in pts:
            p = make_point(row)
            c1, w1 = grid.locate_cell(p)
            c2, w2 = grid.locate_cell(p)
            c3, w3 = fresh.locate_cell(p)
            assert c1.index == c2.index == c3.index
            assert np.array_equal(np.asarray(w1), np.asarray(w2))

    def test_locate_batch_matches_single(self, rng):
        grid = subdivide(3, 4)
        pts = rng.dirichlet(np.ones(4), size=50)
        lam, verts = locate_batch(3, 4, pts)
        assert np.all(lam >= 0)
        rec = np.einsum("bt,btj->bj", lam, verts / 4.0)
        assert np.abs(rec - pts).max() < 1e-10

    def test_module_alias(self):
        grid = subdivide(2, 2)
        p = make_point((0.6, 0.3, 0.1))
        cell, w = locate_cell(grid, p)
        rec = (np.asarray(w)[:, None] * cell.embedded()).sum(axis=0)
        assert np.abs(rec - p.as_array()).max() < 1e-12


@settings(max_examples=60, deadline=None)
@given(
    st.integers(1, 3),
    st.integers(1, 6),
    st.lists(st.floats(1e-6, 1.0), min_size=5, max_size=5),
)
def test_locate_reconstruction_property(n, m, raw):
    coords = np.asarray(raw[: n + 1])
    coords = coords / coords.sum()
    grid = subdivide(n, m)
    cell, w = grid.locate_cell(make_point(coords))
    rec = (np.asarray(w)[:, None] * cell.embedded()).sum(axis=0)
    assert np.abs(rec - coords).max() < 1e-10


class TestCellEncoding:
    @pytest.mark.parametrize("n,m", [(1, 3), (2, 4), (3, 2)])
    def test_roundtrip_and_validity(self, n, m):
        seen = set()
        for c in range(m**n):
            base, perm = decode_cell(n, m, c)
            assert valid_cell(m, base, perm)
            assert encode_cell(m, base, perm) == c
            verts = path_vertices(m, base, perm)
            assert len(set(verts)) == n + 1
            for v in verts:
                assert sum(v) == m and min(v) >= 0
            seen.add(frozenset(verts))
        assert len(seen) == m**n

    def test_pivot_is_involutive(self):
        n, m = 3, 3
        for c in range(m**n):
            base, perm = decode_cell(n, m, c)
            for t in range(n + 1):
                piv = pivot_cell(m, base, perm, t)
                if piv is None:
                    continue
                base2, perm2, t_new = piv
                back = pivot_cell(m, base2, perm2, t_new)
                assert back is not None
                assert (back[0], back[1]) == (base, perm)
                # the shared face really is shared
                old = set(path_vertices(m, base, perm)) - {
                    path_vertices(m, base, perm)[t]
                }
                new = set(path_vertices(m, base2, perm2)) - {
                    path_vertices(m, base2, perm2)[t_new]
                }
                assert old == new


class TestGridJson:
    def test_roundtrip(self):
        grid = subdivide(2, 4)
        data = json.loads(grid.to_json())
        assert data["n"] == 2 and data["m"] == 4
        assert len(data["cells"]) == 16
        assert len(data["vertices"]) == 15
        back = SubdivisionGrid.from_json_dict(data)
        assert np.array_equal(back.cells, grid.cells)

    def test_mismatch_rejected(self):
        grid = subdivide(2, 2)
        data = grid.to_json_dict()
        data["vertices"][0] = [1, 1, 0]
        with pytest.raises(NotOnSimplex):
            SubdivisionGrid.from_json_dict(data)


class TestKernelBackends:
    def test_decode_agreement(self):
        from fixsim import _kernels_np

        try:
            from fixsim import _kernels_nb
        except ImportError:
            pytest.skip("numba unavailable")
        for n, m in [(1, 5), (2, 4), (3, 3)]:
            a = _kernels_np.decode_cells_range(n, m, 0, m**n)
            b = _kernels_nb.decode_cells_range(n, m, 0, m**n)
            assert np.array_equal(a, b)

    def test_count_agreement(self, rng):
        from fixsim import _kernels_np

        try:
            from fixsim import _kernels_nb
        except ImportError:
            pytest.skip("numba unavailable")
        grid = subdivide(3, 3)
        labels = rng.integers(0, 4, size=grid.num_vertices).astype(np.int64)
        assert _kernels_np.count_fully_labeled(
            grid.cells, labels
        ) == _kernels_nb.count_fully_labeled(grid.cells, labels)
        assert _kernels_np.first_fully_labeled(
            grid.cells, labels
        ) == _kernels_nb.first_fully_labeled(grid.cells, labels)
