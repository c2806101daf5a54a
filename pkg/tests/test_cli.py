"""End-to-end tests of the command-line surface and its exit-code contract."""

import json

import pytest

from fixsim import random_labeling, subdivide
from fixsim.cli import main
from fixsim.labeling import Labeling


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_labeling(tmp_path, n, m, seed=0, mutate=None):
    grid = subdivide(n, m)
    lab = random_labeling(grid, seed)
    data = lab.to_json_dict()
    if mutate:
        mutate(data)
    path = tmp_path / "labeling.json"
    path.write_text(json.dumps(data))
    return path


class TestGrid:
    def test_counts(self, capsys):
        code, out, err = run(capsys, "grid", "--n", "2", "--m", "4")
        assert code == 0
        data = json.loads(out)
        assert len(data["cells"]) == 16
        assert len(data["vertices"]) == 15

    def test_single_cell(self, capsys):
        code, out, _ = run(capsys, "grid", "--n", "1", "--m", "1")
        assert code == 0
        assert len(json.loads(out)["cells"]) == 1

    def test_m_zero_usage_error(self, capsys):
        code, out, err = run(capsys, "grid", "--n", "2", "--m", "0")
        assert code == 2

    def test_budget_env(self, capsys, monkeypatch):
        monkeypatch.setenv("FIXSIM_CELL_BUDGET", "10")
        code, out, err = run(capsys, "grid", "--n", "2", "--m", "10")
        assert code == 4

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "grid.json"
        code, out, _ = run(capsys, "grid", "--n", "2", "--m", "2", "--out",
                           str(target))
        assert code == 0
        assert out == ""
        assert len(json.loads(target.read_text())["cells"]) == 4


class TestLabelAndSperner:
    def test_pipeline(self, capsys, tmp_path):
        lab_path = tmp_path / "lab.json"
        code, _, _ = run(capsys, "label", "--n", "2", "--m", "3",
                         "--map", "rotate", "--out", str(lab_path))
        assert code == 0
        code, out, err = run(capsys, "sperner", "--labeling", str(lab_path))
        assert code == 0
        data = json.loads(out)
        assert data["count"] % 2 == 1
        assert len(data["firstCell"]) == 3

    def test_rational_label(self, capsys, tmp_path):
        lab_path = tmp_path / "lab.json"
        code, _, _ = run(capsys, "label", "--n", "2", "--m", "2",
                         "--map", "pull t=0.5", "--rational",
                         "--out", str(lab_path))
        assert code == 0
        Labeling.from_json_dict(json.loads(lab_path.read_text()))

    def test_path_strategy(self, capsys, tmp_path):
        lab = write_labeling(tmp_path, 2, 3, seed=5)
        code, out, _ = run(capsys, "sperner", "--labeling", str(lab),
                           "--strategy", "path")
        assert code == 0

    def test_inadmissible_labeling(self, capsys, tmp_path):
        def mutate(data):
            # mislabel a corner
            for entry in data["labels"]:
                if entry["v"] == [3, 0, 0]:
                    entry["l"] = 2
        lab = write_labeling(tmp_path, 2, 3, mutate=mutate)
        code, out, _ = run(capsys, "sperner", "--labeling", str(lab))
        assert code == 2
        assert json.loads(out)["violations"]

    def test_map_file(self, capsys, tmp_path):
        map_path = tmp_path / "map.txt"
        map_path.write_text("g0=x1; g1=x2; g2=x0")
        code, _, _ = run(capsys, "label", "--n", "2", "--m", "2",
                         "--map-file", str(map_path),
                         "--out", str(tmp_path / "l.json"))
        assert code == 0


class TestFixpoint:
    def test_rotate_converges(self, capsys):
        code, out, err = run(capsys, "fixpoint", "--map", "rotate",
                             "--n", "2", "--tol", "1e-6")
        assert code == 0
        data = json.loads(out)
        assert data["status"] == "converged"
        assert max(abs(c - 1 / 3) for c in data["point"]) <= 1e-6
        assert data["residual"] <= 1e-6
        assert data["witness"] is None
        assert all("m" in step and "residual" in step for step in data["trace"])

    def test_identity_witness_exit_3(self, capsys):
        code, out, _ = run(capsys, "fixpoint", "--map", "identity",
                           "--n", "2", "--tol", "1e-6")
        assert code == 3
        data = json.loads(out)
        assert data["status"] == "non_contraction_witness"
        assert data["witness"]["distance"] >= 1e-5

    def test_syntax_error_exit_2(self, capsys, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("g0=x0 +")
        code, _, err = run(capsys, "fixpoint", "--map-file", str(bad),
                           "--n", "2")
        assert code == 2

    def test_expression_needs_modulus(self, capsys):
        code, _, err = run(capsys, "fixpoint", "--map", "g0=x1; g1=x2; g2=x0",
                           "--n", "2")
        assert code == 2
        assert "continuity" in err

    def test_expression_with_lipschitz(self, capsys):
        code, out, _ = run(capsys, "fixpoint", "--map", "g0=x1; g1=x2; g2=x0",
                           "--n", "2", "--tol", "1e-4",
                           "--lipschitz", "1.0")
        assert code == 0

    def test_modulus_table_file(self, capsys, tmp_path):
        table = tmp_path / "table.json"
        table.write_text(json.dumps([[1e-4, 1e-4], [1e-2, 1e-2], [0.5, 0.5]]))
        code, out, _ = run(capsys, "fixpoint", "--map", "rotate", "--n", "2",
                           "--tol", "1e-3", "--modulus-table", str(table))
        assert code == 0


class TestConverse:
    def test_roundtrip_report(self, capsys, tmp_path):
        lab = write_labeling(tmp_path, 2, 4, seed=9)
        code, out, _ = run(capsys, "converse", "--labeling", str(lab))
        assert code == 0
        data = json.loads(out)
        assert data["exact"] is True
        assert data["tau"] == "1/8"
        assert len(data["fixedPoint"]) == 3
        assert data["solver"]["residual"] <= 1e-6

    def test_explicit_tau(self, capsys, tmp_path):
        lab = write_labeling(tmp_path, 2, 3, seed=2)
        code, out, _ = run(capsys, "converse", "--labeling", str(lab),
                           "--tau", "1/12")
        assert code == 0
        assert json.loads(out)["tau"] == "1/12"

    def test_tau_too_large_exit_2(self, capsys, tmp_path):
        lab = write_labeling(tmp_path, 2, 3, seed=2)
        code, _, err = run(capsys, "converse", "--labeling", str(lab),
                           "--tau", "1")
        assert code == 2

    def test_inadmissible_exit_2(self, capsys, tmp_path):
        def mutate(data):
            for entry in data["labels"]:
                if entry["v"] == [0, 3, 0]:
                    entry["l"] = 0
        lab = write_labeling(tmp_path, 2, 3, mutate=mutate)
        code, out, _ = run(capsys, "converse", "--labeling", str(lab))
        assert code == 2
        assert json.loads(out)["violations"]

    def test_missing_file_exit_2(self, capsys, tmp_path):
        code, _, _ = run(capsys, "converse", "--labeling",
                         str(tmp_path / "nope.json"))
        assert code == 2


class TestRender:
    def test_labeled_grid_svg(self, capsys, tmp_path):
        lab = write_labeling(tmp_path, 2, 4, seed=1)
        out_path = tmp_path / "fig.svg"
        code, _, _ = run(capsys, "render", "--labeling", str(lab),
                         "--out", str(out_path))
        assert code == 0
        svg = out_path.read_text()
        assert svg.count("<polygon") == 16
        assert svg.count("<text") == 15

    def test_unlabeled_grid_svg(self, capsys, tmp_path):
        grid_path = tmp_path / "grid.json"
        run(capsys, "grid", "--n", "2", "--m", "3", "--out", str(grid_path))
        out_path = tmp_path / "mesh.svg"
        code, _, _ = run(capsys, "render", "--grid", str(grid_path),
                         "--out", str(out_path))
        assert code == 0
        svg = out_path.read_text()
        assert svg.count("<polygon") == 9
        assert "<text" not in svg

    def test_dimension_guard(self, capsys, tmp_path):
        lab = write_labeling(tmp_path, 3, 2, seed=1)
        code, _, err = run(capsys, "render", "--labeling", str(lab),
                           "--out", str(tmp_path / "x.svg"))
        assert code == 2

    def test_needs_input(self, capsys, tmp_path):
        with pytest.raises(SystemExit):
            main(["render", "--out", str(tmp_path / "x.svg")])
