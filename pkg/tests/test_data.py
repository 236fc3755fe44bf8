"""Data generation and ingestion: ball invariants, generators, the cube map."""

import numpy as np
import pytest

from cbsketch.data import (
    DataValidationError,
    Dataset,
    PreprocessRecord,
    apply_record,
    dataset_to_csv,
    ingest_csv,
    make_dataset,
    sample_ball,
    synth_f1,
    synth_f2,
)


class TestSampleBall:
    def test_all_inside(self):
        X = sample_ball(3, 5000, seed=1)
        assert float(np.max(np.linalg.norm(X, axis=1))) <= 0.5

    def test_volume_fraction(self):
        X = sample_ball(3, 100_000, seed=2)
        frac = float(np.mean(np.linalg.norm(X, axis=1) <= 0.25))
        assert abs(frac - 0.125) < 0.01

    def test_deterministic(self):
        assert np.array_equal(sample_ball(4, 100, seed=3), sample_ball(4, 100, seed=3))

    def test_empty(self):
        assert sample_ball(2, 0, seed=4).shape == (0, 2)


class TestSyntheticTargets:
    def test_f1_at_origin(self):
        assert synth_f1(np.zeros(3))[0] == pytest.approx(-0.045)

    def test_f1_roots(self):
        x = np.array([0.25, 0.0, 0.0])   # r = 0.5
        assert synth_f1(x)[0] == pytest.approx(0.0, abs=1e-15)
        x = np.array([0.05, 0.0, 0.0])   # r = 0.1
        assert synth_f1(x)[0] == pytest.approx(0.0, abs=1e-15)

    def test_f1_wrong_dimension(self):
        with pytest.raises(DataValidationError):
            synth_f1(np.zeros(4))

    def test_f2_at_origin(self):
        assert synth_f2(np.zeros(4))[0] == pytest.approx(3.0)

    def test_f2_outside_support(self):
        x = np.array([0.5, 0.0, 0.0, 0.0])  # r = 1.1 > 1
        assert synth_f2(x)[0] == 0.0

    def test_f2_support_boundary(self):
        x = np.array([1 / 2.2, 0.0, 0.0, 0.0])  # r = 1
        assert synth_f2(x)[0] == pytest.approx(0.0, abs=1e-12)

    def test_f2_wrong_dimension(self):
        with pytest.raises(DataValidationError):
            synth_f2(np.zeros(3))


class TestMakeDataset:
    def test_noiseless_targets_exact(self):
        ds = make_dataset("f1", 500, 0.0, seed=5)
        np.testing.assert_array_equal(ds.y, synth_f1(ds.X))

    def test_noise_standard_deviation(self):
        ds = make_dataset("f1", 100_000, 0.1, seed=6)
        noise = ds.y - synth_f1(ds.X)
        assert abs(float(np.std(noise)) - 0.1) < 0.002

    def test_deterministic(self):
        a = make_dataset("f2", 100, 0.3, seed=7)
        b = make_dataset("f2", 100, 0.3, seed=7)
        assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)

    def test_ball_invariant(self):
        ds = make_dataset("f2", 1000, 0.0, seed=8)
        assert float(np.max(np.linalg.norm(ds.X, axis=1))) <= 0.5 + 1e-12

    def test_unknown_target(self):
        with pytest.raises(ValueError):
            make_dataset("f3", 10, 0.0, seed=9)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


class TestIngestCsv:
    def test_single_feature_map(self, tmp_path):
        path = tmp_path / "one.csv"
        write_csv(path, ["f", "y"], [[0, 1], [5, 2], [10, 3]])
        ds = ingest_csv(path, "y")
        np.testing.assert_allclose(ds.X[:, 0], [-0.5, 0.0, 0.5], atol=1e-15)

    def test_cube_corner_reaches_ball_surface(self, tmp_path):
        path = tmp_path / "corner.csv"
        rows = [[0, 0, 0, 0, 1], [1, 1, 1, 1, 2], [0.5, 0.2, 0.9, 0.4, 3]]
        write_csv(path, ["a", "b", "c", "d", "y"], rows)
        ds = ingest_csv(path, "y")
        assert np.linalg.norm(ds.X[1]) == pytest.approx(0.5, abs=1e-12)
        assert float(np.max(np.linalg.norm(ds.X, axis=1))) <= 0.5 + 1e-12

    def test_log_transform(self, tmp_path):
        path = tmp_path / "log.csv"
        write_csv(path, ["f", "y"], [[0, 0], [1, np.e - 1], [2, 1]])
        ds = ingest_csv(path, "y", log_transform=True)
        assert ds.y[0] == 0.0
        assert ds.y[1] == pytest.approx(1.0)

    def test_constant_column_dropped(self, tmp_path):
        path = tmp_path / "const.csv"
        write_csv(path, ["a", "b", "y"], [[1, 7, 0], [2, 7, 1], [3, 7, 2]])
        ds = ingest_csv(path, "y")
        assert ds.d == 1
        assert ds.preprocessing.dropped_columns == ("b",)

    def test_missing_target_column(self, tmp_path):
        path = tmp_path / "miss.csv"
        write_csv(path, ["a", "y"], [[1, 0], [2, 1]])
        with pytest.raises(DataValidationError):
            ingest_csv(path, "z")

    def test_non_numeric_cell(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,y\n1,2\nfoo,3\n", encoding="utf-8")
        with pytest.raises(DataValidationError):
            ingest_csv(path, "y")

    def test_record_reuse_reproduces_training_matrix(self, tmp_path):
        path = tmp_path / "train.csv"
        rng = np.random.default_rng(10)
        rows = np.column_stack([rng.uniform(-3, 9, (50, 3)), rng.standard_normal(50)])
        write_csv(path, ["a", "b", "c", "y"], rows.tolist())
        ds = ingest_csv(path, "y")
        X2, y2 = apply_record(ds.preprocessing, path, "y")
        assert np.array_equal(X2, ds.X)
        assert np.array_equal(y2, ds.y)

    def test_heldout_rows_use_training_statistics(self, tmp_path):
        train_path = tmp_path / "train.csv"
        write_csv(train_path, ["a", "y"], [[0, 0], [10, 1]])
        ds = ingest_csv(train_path, "y")
        record = ds.preprocessing
        test_path = tmp_path / "test.csv"
        write_csv(test_path, ["a", "y"], [[5, 0], [20, 0]])  # 20 is out of range
        X, _ = apply_record(record, test_path, "y")
        assert X[0, 0] == pytest.approx(0.0)     # midpoint of the training range
        assert X[1, 0] == pytest.approx(1.5)     # extrapolated, record unchanged
        assert record.feature_max == (10.0,)

    def test_duplicate_ingest_identical(self, tmp_path):
        path = tmp_path / "dup.csv"
        write_csv(path, ["a", "b", "y"], [[0, 1, 0], [4, 3, 1], [2, 2, 2]])
        d1 = ingest_csv(path, "y")
        d2 = ingest_csv(path, "y")
        assert np.array_equal(d1.X, d2.X)
        assert d1.preprocessing == d2.preprocessing


class TestDatasetExport:
    def test_export_round_trips_through_ingestion_dialect(self, tmp_path):
        ds = make_dataset("f1", 30, 0.05, seed=12)
        path = tmp_path / "export.csv"
        dataset_to_csv(ds, path)
        header = path.read_text(encoding="utf-8").splitlines()[0]
        assert header == "x0,x1,x2,y"
        import csv as _csv
        rows = list(_csv.reader(open(path)))[1:]
        X = np.array([[float(v) for v in row[:3]] for row in rows])
        y = np.array([float(row[3]) for row in rows])
        assert np.array_equal(X, ds.X)   # 17 digits round-trips float64
        assert np.array_equal(y, ds.y)


class TestDatasetInvariants:
    def test_rejects_out_of_ball(self):
        with pytest.raises(DataValidationError):
            Dataset(X=np.array([[0.6, 0.0]]), y=np.array([1.0]),
                    preprocessing=PreprocessRecord(source="csv"))

    def test_rejects_length_mismatch(self):
        with pytest.raises(DataValidationError):
            Dataset(X=np.zeros((3, 2)), y=np.zeros(2),
                    preprocessing=PreprocessRecord(source="csv"))

    def test_immutable_arrays(self):
        ds = make_dataset("f1", 10, 0.0, seed=11)
        with pytest.raises(ValueError):
            ds.X[0, 0] = 9.0
