"""Tests for admissibility rules and map-induced labelings."""

import json

import numpy as np
import pytest

from fixsim import (
    InvalidInput,
    check_admissible,
    enumerate_labelings,
    is_fully_labeled,
    label_from_function,
    parse_map,
    random_labeling,
    subdivide,
)
from fixsim.labeling import Labeling
from conftest import random_expression_map


def labeling_with(grid, overrides):
    """Carrier-minimal labeling with explicit overrides {int_coords: label}."""
    labels = np.argmax(grid.vertex_coords > 0, axis=1).astype(np.int64)
    for coords, label in overrides.items():
        vid = int(grid.vertex_ids(np.asarray([coords]))[0])
        labels[vid] = label
    return Labeling(grid, labels)


class TestCheckAdmissible:
    def test_corner_keeps_its_index(self):
        grid = subdivide(2, 2)
        lab = labeling_with(grid, {})
        assert check_admissible(grid, lab) == []

    def test_corner_mislabeled(self):
        grid = subdivide(2, 2)
        lab = labeling_with(grid, {(2, 0, 0): 1})
        bad = check_admissible(grid, lab)
        assert len(bad) == 1
        assert bad[0].int_coords == (2, 0, 0)

    def test_edge_vertex_outside_carrier(self):
        grid = subdivide(2, 2)
        lab = labeling_with(grid, {(1, 1, 0): 2})
        bad = check_admissible(grid, lab)
        assert [v.int_coords for v in bad] == [(1, 1, 0)]
        assert "carrier" in bad[0].reason

    def test_interior_vertex_free(self):
        grid = subdivide(2, 3)
        for label in (0, 1, 2):
            lab = labeling_with(grid, {(1, 1, 1): label})
            assert check_admissible(grid, lab) == []

    def test_label_out_of_range(self):
        grid = subdivide(2, 2)
        lab = labeling_with(grid, {(1, 1, 0): 0})
        lab.labels[0] = 7
        assert any("outside" in v.reason for v in check_admissible(grid, lab))


class TestLabelFromFunction:
    def test_identity_picks_smallest_carrier_index(self):
        grid = subdivide(2, 4)
        lab = label_from_function(grid, parse_map("identity", 2))
        expected = np.argmax(grid.vertex_coords > 0, axis=1)
        assert np.array_equal(lab.labels, expected)

    def test_corner_label_under_any_map(self):
        grid = subdivide(2, 3)
        for text in ("rotate", "pull t=0.7", "g0=x1*x1; g1=x0; g2=max(x2,x1)"):
            lab = label_from_function(grid, parse_map(text, 2))
            for k in range(3):
                corner = [0, 0, 0]
                corner[k] = 3
                vid = int(grid.vertex_ids(np.asarray([corner]))[0])
                assert lab.label_of(vid) == k

    def test_pull_at_corner_hand_value(self):
        # f((1,0,0)) = 0.7*(1,0,0) + 0.3*(1/3,1/3,1/3) = (0.8, 0.1, 0.1);
        # 0.8 <= 1 so the corner keeps label 0
        grid = subdivide(2, 1)
        spec = parse_map("pull t=0.3", 2)
        out = spec.eval_point([1.0, 0.0, 0.0])
        assert np.allclose(out, [0.8, 0.1, 0.1])
        lab = label_from_function(grid, spec)
        vid = int(grid.vertex_ids(np.asarray([[1, 0, 0]]))[0])
        assert lab.label_of(vid) == 0

    @pytest.mark.parametrize("text", ["identity", "rotate", "pull t=0.4"])
    @pytest.mark.parametrize("n,m", [(1, 8), (2, 6), (3, 4)])
    def test_builtins_admissible(self, text, n, m):
        grid = subdivide(n, m)
        lab = label_from_function(grid, parse_map(text, n))
        assert check_admissible(grid, lab) == []

    def test_random_maps_admissible_and_tight(self, rng):
        # label choice must satisfy both f_l(v) <= v_l and v_l > 0
        for _ in range(100):
            n = int(rng.integers(1, 4))
            m = int(rng.integers(1, 9))
            grid = subdivide(n, m)
            spec = random_expression_map(n, rng)
            try:
                lab = label_from_function(grid, spec)
            except Exception:
                continue  # degenerate random map
            assert check_admissible(grid, lab) == []
            emb = grid.embedded_vertices()
            values = spec.eval_batch(emb)
            rows = np.arange(grid.num_vertices)
            picked_v = emb[rows, lab.labels]
            picked_f = values[rows, lab.labels]
            assert np.all(grid.vertex_coords[rows, lab.labels] > 0)
            assert np.all(picked_f <= picked_v + 1e-12)

    def test_exact_mode_matches_float(self):
        grid = subdivide(2, 5)
        spec = parse_map("rotate", 2)
        assert np.array_equal(
            label_from_function(grid, spec, exact=True).labels,
            label_from_function(grid, spec).labels,
        )

    def test_threads_match(self):
        grid = subdivide(2, 6)
        spec = parse_map("pull t=0.25", 2)
        assert np.array_equal(
            label_from_function(grid, spec, threads=3).labels,
            label_from_function(grid, spec).labels,
        )


class TestIsFullyLabeled:
    def test_definition(self):
        grid = subdivide(2, 2)
        lab = random_labeling(grid, 5)
        for ci in range(grid.num_cells):
            cell = grid.cell(ci)
            labs = sorted(lab.label_of(i) for i in cell.vertex_ids)
            assert is_fully_labeled(cell, lab) == (labs == [0, 1, 2])

    def test_single_cell_rule_one(self):
        grid = subdivide(1, 1)
        lab = labeling_with(grid, {})
        assert is_fully_labeled(grid.cell(0), lab)


class TestGeneration:
    def test_enumeration_count_n2_m2(self):
        assert sum(1 for _ in enumerate_labelings(subdivide(2, 2))) == 8

    def test_enumeration_count_n2_m3(self):
        assert sum(1 for _ in enumerate_labelings(subdivide(2, 3))) == 192

    def test_enumerated_all_admissible(self):
        grid = subdivide(2, 2)
        for lab in enumerate_labelings(grid):
            assert check_admissible(grid, lab) == []

    def test_random_admissible(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 4))
            m = int(rng.integers(1, 7))
            grid = subdivide(n, m)
            assert check_admissible(grid, random_labeling(grid, rng)) == []


class TestLabelingJson:
    def test_roundtrip(self):
        grid = subdivide(2, 3)
        lab = random_labeling(grid, 11)
        data = json.loads(lab.to_json())
        back = Labeling.from_json_dict(data)
        assert np.array_equal(back.labels, lab.labels)

    def test_missing_vertex_rejected(self):
        grid = subdivide(2, 2)
        data = random_labeling(grid, 1).to_json_dict()
        data["labels"] = data["labels"][:-1]
        with pytest.raises(InvalidInput):
            Labeling.from_json_dict(data)

    def test_unknown_vertex_rejected(self):
        grid = subdivide(2, 2)
        data = random_labeling(grid, 1).to_json_dict()
        data["labels"][0]["v"] = [5, 0, 0]
        with pytest.raises(InvalidInput):
            Labeling.from_json_dict(data)

    def test_duplicate_vertex_rejected(self):
        grid = subdivide(2, 2)
        data = random_labeling(grid, 1).to_json_dict()
        data["labels"][1] = data["labels"][0]
        with pytest.raises(InvalidInput):
            Labeling.from_json_dict(data)
