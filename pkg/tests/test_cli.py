"""Command-line surface: exit codes, file round trips, determinism."""

import csv
import json

import numpy as np
import pytest

from cbsketch.cli import main
from cbsketch.data import make_dataset


def run_cli(*argv):
    return main(list(argv))


def write_ball_csv(path, dataset):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        d = dataset.X.shape[1]
        writer.writerow([f"x{i}" for i in range(d)] + ["y"])
        for row, target in zip(dataset.X, dataset.y):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(target))])


@pytest.fixture
def synthetic_csvs(tmp_path):
    train = make_dataset("f1", 300, 0.0, seed=1)
    test = make_dataset("f1", 80, 0.0, seed=2)
    train_path = tmp_path / "train.csv"
    test_path = tmp_path / "test.csv"
    write_ball_csv(train_path, train)
    write_ball_csv(test_path, test)
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "target_column": "y", "preprocess": "none",
        "J": 2, "n": 3, "N": 10, "tau": 0.1, "seed": 7,
    }), encoding="utf-8")
    return train_path, test_path, config


class TestComponentsCheck:
    def test_passes_and_writes_csv(self, tmp_path):
        code = run_cli("components-check", "--m-range", "1", "5",
                       "--grid-density", "20001", "--out-dir", str(tmp_path))
        assert code == 0
        rows = list(csv.DictReader(open(tmp_path / "components_check.csv")))
        squares = [r for r in rows if r["component"] == "square"]
        assert len(squares) == 5
        assert float(squares[0]["sup_error"]) == pytest.approx(2.0**-4, abs=1e-5)

    def test_bad_range_is_usage_error(self, tmp_path):
        assert run_cli("components-check", "--m-range", "3", "1",
                       "--out-dir", str(tmp_path)) == 1


class TestSphereGen:
    def test_writes_points(self, tmp_path):
        out = tmp_path / "pts.csv"
        code = run_cli("sphere-gen", "-d", "3", "-N", "7", "--out", str(out))
        assert code == 0
        rows = list(csv.reader(open(out)))
        assert rows[0] == ["x0", "x1", "x2"]
        pts = np.array([[float(v) for v in row] for row in rows[1:]])
        assert pts.shape == (7, 3)
        np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)

    def test_env_var_supplies_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("CBSKETCH_OUT", str(tmp_path / "from_env"))
        assert run_cli("sphere-gen", "-d", "2", "-N", "3") == 0
        assert (tmp_path / "from_env" / "directions.csv").exists()

    def test_random_mode_seeded(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_cli("sphere-gen", "-d", "4", "-N", "5", "--mode", "random",
                "--seed", "3", "--out", str(a))
        run_cli("sphere-gen", "-d", "4", "-N", "5", "--mode", "random",
                "--seed", "3", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()


class TestFitPredict:
    def test_round_trip(self, synthetic_csvs, tmp_path):
        train_path, test_path, config = synthetic_csvs
        model_path = tmp_path / "model.json"
        assert run_cli("fit", "--config", str(config), "--data", str(train_path),
                       "--model", str(model_path)) == 0

        preds = tmp_path / "preds.csv"
        assert run_cli("predict", "--model", str(model_path),
                       "--data", str(test_path), "--out", str(preds)) == 0
        rows = list(csv.DictReader(open(preds)))
        assert len(rows) == 80

        # load -> save -> load is byte-stable
        from cbsketch.solver import model_from_json, model_to_json
        text = model_path.read_text(encoding="utf-8")
        assert model_to_json(model_from_json(text)) == text

        # a second predict run is byte-identical
        preds2 = tmp_path / "preds2.csv"
        run_cli("predict", "--model", str(model_path), "--data", str(test_path),
                "--out", str(preds2))
        assert preds.read_bytes() == preds2.read_bytes()

    def test_dimension_mismatch_is_data_error(self, synthetic_csvs, tmp_path):
        train_path, _, config = synthetic_csvs
        model_path = tmp_path / "model.json"
        run_cli("fit", "--config", str(config), "--data", str(train_path),
                "--model", str(model_path))
        bad = tmp_path / "bad.csv"
        wrong = make_dataset("f2", 20, 0.0, seed=3)  # d = 4, model expects 3
        write_ball_csv(bad, wrong)
        assert run_cli("predict", "--model", str(model_path), "--data", str(bad),
                       "--out", str(tmp_path / "p.csv")) == 2

    def test_missing_config_file_is_usage_error(self, tmp_path):
        assert run_cli("fit", "--config", str(tmp_path / "nope.json"),
                       "--data", str(tmp_path / "nope.csv"),
                       "--model", str(tmp_path / "m.json")) == 1

    def test_flag_override(self, synthetic_csvs, tmp_path):
        train_path, _, config = synthetic_csvs
        model_path = tmp_path / "model.json"
        assert run_cli("fit", "--config", str(config), "--data", str(train_path),
                       "--model", str(model_path), "--set", "J=1") == 0
        doc = json.loads(model_path.read_text(encoding="utf-8"))
        assert doc["spec"]["J"] == 1


class TestSelect:
    def test_holdout_outputs(self, synthetic_csvs, tmp_path):
        train_path, _, config = synthetic_csvs
        out = tmp_path / "sel"
        code = run_cli("select", "--config", str(config), "--data", str(train_path),
                       "--set", "method=holdout", "--set", "tau=0.2",
                       "--out-dir", str(out))
        assert code == 0
        assert (out / "selection_table.csv").exists()
        assert (out / "selection_model.json").exists()
        chosen = json.loads((out / "selection_chosen.json").read_text())
        assert 1 <= chosen["n"] <= 5


class TestBench:
    def _tiny_config(self, tmp_path):
        cfg = tmp_path / "bench.json"
        cfg.write_text(json.dumps({
            "trials": 2, "train_size": 120, "test_size": 60,
            "noise_levels": [0.0, 0.1],
            "J_grid": [1, 2], "n_grid": [1, 2], "N_grid": [4, 8],
            "tau_grid": [0.1], "master_seed": 99,
        }), encoding="utf-8")
        return cfg

    def test_sim3_outputs_and_determinism(self, tmp_path):
        cfg = self._tiny_config(tmp_path)
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert run_cli("bench", "--experiment", "sim3", "--config", str(cfg),
                       "--out-dir", str(out1)) == 0
        assert run_cli("bench", "--experiment", "sim3", "--config", str(cfg),
                       "--out-dir", str(out2)) == 0
        for name in ("sim3_results.csv", "sim3_cells.csv", "sim3_summary.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
        assert (out1 / "sim3_rmse.svg").exists()
        report = json.loads((out1 / "sim3_report.json").read_text())
        assert report["trial_count"] == 2
        assert report["environment"]["master_seed"] == 99

    def test_sim2_runs(self, tmp_path):
        cfg = self._tiny_config(tmp_path)
        out = tmp_path / "s2"
        assert run_cli("bench", "--experiment", "sim2", "--config", str(cfg),
                       "--out-dir", str(out)) == 0
        rows = list(csv.DictReader(open(out / "sim2_results.csv")))
        modes = {r["mode"] for r in rows}
        assert modes == {"equal-area", "random"}

    def test_unknown_experiment_is_usage_error(self, tmp_path):
        assert run_cli("bench", "--experiment", "sim9",
                       "--out-dir", str(tmp_path)) == 1

    def test_unknown_config_key_is_usage_error(self, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text('{"no_such_key": 1}', encoding="utf-8")
        assert run_cli("bench", "--experiment", "sim3", "--config", str(cfg),
                       "--out-dir", str(tmp_path)) == 1

    def test_partial_results_flushed_on_failure(self, tmp_path, monkeypatch):
        # poison the second grid_search call; the first trial's rows must
        # still land on disk before the failure surfaces
        import cbsketch.bench as bench_mod
        calls = {"n": 0}
        real = bench_mod.grid_search

        def flaky(*args, **kwargs):
            calls["n"] += 1
            if calls["n"] >= 3:
                raise bench_mod.np.linalg.LinAlgError("synthetic failure")
            return real(*args, **kwargs)

        monkeypatch.setattr(bench_mod, "grid_search", flaky)
        cfg = self._tiny_config(tmp_path)
        out = tmp_path / "partial"
        code = run_cli("bench", "--experiment", "sim3", "--config", str(cfg),
                       "--out-dir", str(out))
        assert code == 3
        rows = list(csv.DictReader(open(out / "sim3_results.csv")))
        assert len(rows) == 2

    def test_real_experiment(self, synthetic_csvs, tmp_path):
        train_path, test_path, _ = synthetic_csvs
        cfg = tmp_path / "real.json"
        cfg.write_text(json.dumps({
            "train_csv": str(train_path), "test_csv": str(test_path),
            "target_column": "y", "J_grid": [1], "n_grid": [2],
            "N_grid": [5], "tau_grid": [0.2], "master_seed": 5,
        }), encoding="utf-8")
        out = tmp_path / "real_out"
        assert run_cli("bench", "--experiment", "real", "--config", str(cfg),
                       "--out-dir", str(out)) == 0
        rows = list(csv.DictReader(open(out / "real_results.csv")))
        assert "test_rmse" in rows[0]
