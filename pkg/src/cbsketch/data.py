"""Synthetic generators and CSV ingestion with ball-mapping preprocessing.

All inputs end up inside the closed ball of radius 1/2.  Synthetic data
is sampled there directly; CSV features are min-max normalized to
[0, 1] per column, centered, and shrunk by 1/sqrt(d) (the tightest
affine map that keeps an arbitrary cube inside the ball).  The record of
every constant used is kept so held-out rows are transformed with
training statistics only.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

BALL_RADIUS = 0.5
_BALL_TOL = 1e-12

NOISE_GENERATOR = "pcg64"  # numpy default_rng bit generator, recorded for provenance


class DataValidationError(ValueError):
    """Malformed or out-of-contract input data."""


@dataclass(frozen=True)
class PreprocessRecord:
    """Constants of the raw-to-ball map plus target transform and provenance."""

    source: str                       # "synthetic-f1" | "synthetic-f2" | "csv"
    target_transform: str = "none"    # "none" | "log1p"
    feature_names: tuple[str, ...] | None = None
    feature_min: tuple[float, ...] | None = None
    feature_max: tuple[float, ...] | None = None
    dropped_columns: tuple[str, ...] = ()
    target_name: str | None = None
    noise_generator: str = NOISE_GENERATOR

    def __post_init__(self):
        if self.feature_min is not None:
            for name, lo, hi in zip(self.feature_names, self.feature_min, self.feature_max):
                if not lo < hi:
                    raise DataValidationError(
                        f"retained feature {name!r} has min {lo} >= max {hi}"
                    )

    @property
    def is_identity(self) -> bool:
        return self.feature_min is None

    def transform_X(self, X_raw: np.ndarray) -> np.ndarray:
        """Apply the stored map; never updates the record."""
        X_raw = np.atleast_2d(np.asarray(X_raw, dtype=np.float64))
        if self.is_identity:
            return X_raw
        lo = np.array(self.feature_min)
        hi = np.array(self.feature_max)
        if X_raw.shape[1] != lo.size:
            raise DataValidationError(
                f"expected {lo.size} features, got {X_raw.shape[1]}"
            )
        unit = (X_raw - lo) / (hi - lo)
        d = lo.size
        return (unit - 0.5) / np.sqrt(d)

    def transform_y(self, y_raw: np.ndarray) -> np.ndarray:
        y_raw = np.asarray(y_raw, dtype=np.float64)
        if self.target_transform == "log1p":
            return np.log1p(y_raw)
        return y_raw


@dataclass(frozen=True)
class Dataset:
    """Inputs inside the radius-1/2 ball, targets, and the map that got them there."""

    X: np.ndarray
    y: np.ndarray
    preprocessing: PreprocessRecord

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        y = np.asarray(self.y, dtype=np.float64)
        if X.shape[0] != y.shape[0]:
            raise DataValidationError(f"{X.shape[0]} inputs but {y.shape[0]} targets")
        norms = np.linalg.norm(X, axis=1)
        if norms.size and float(np.max(norms)) > BALL_RADIUS + _BALL_TOL:
            raise DataValidationError(
                f"input row norm {float(np.max(norms)):.6g} exceeds the ball radius 1/2"
            )
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def size(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def sample_ball(d: int, p: int, seed: int) -> np.ndarray:
    """p i.i.d. uniform points in the radius-1/2 ball of R^d.

    Gaussian direction times radius 0.5 * U**(1/d).
    """
    if d < 1 or p < 0:
        raise ValueError(f"need d >= 1 and p >= 0, got d={d}, p={p}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((p, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = BALL_RADIUS * rng.random(p) ** (1.0 / d)
    return g * r[:, None]


def synth_f1(x) -> np.ndarray:
    """Radial cubic on R^3: (r-0.1)(r-0.5)(r-0.9) with r = 2||x||."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != 3:
        raise DataValidationError(f"this target is defined on R^3, got d={x.shape[1]}")
    r = 2.0 * np.linalg.norm(x, axis=1)
    return (r - 0.1) * (r - 0.5) * (r - 0.9)


def synth_f2(x) -> np.ndarray:
    """Compactly supported Wendland-type bump on R^4 with r = 2.2||x||."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != 4:
        raise DataValidationError(f"this target is defined on R^4, got d={x.shape[1]}")
    r = 2.2 * np.linalg.norm(x, axis=1)
    out = np.where(r <= 1.0, (1.0 - r) ** 6 * (35.0 * r**2 + 18.0 * r + 3.0), 0.0)
    return out


_TARGETS = {"f1": (synth_f1, 3, "synthetic-f1"), "f2": (synth_f2, 4, "synthetic-f2")}


def target_dimension(target: str) -> int:
    if target not in _TARGETS:
        raise ValueError(f"unknown synthetic target {target!r}")
    return _TARGETS[target][1]


def make_dataset(target: str, p: int, noise_std: float, seed: int) -> Dataset:
    """Sample inputs in the ball and add N(0, noise_std^2) to the clean values.

    noise_std = 0 gives the clean targets exactly (the test-set variant).
    """
    if target not in _TARGETS:
        raise ValueError(f"unknown synthetic target {target!r}")
    if p < 1:
        raise ValueError(f"need at least one sample, got {p}")
    if noise_std < 0:
        raise ValueError(f"noise level must be >= 0, got {noise_std}")
    fn, d, source = _TARGETS[target]
    ball_seed, noise_seed = np.random.SeedSequence(seed).spawn(2)
    X = sample_ball(d, p, seed=ball_seed)
    y = fn(X)
    if noise_std > 0:
        y = y + noise_std * np.random.default_rng(noise_seed).standard_normal(p)
    record = PreprocessRecord(source=source)
    return Dataset(X=X, y=y, preprocessing=record)


def _read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataValidationError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataValidationError(
                    f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}"
                )
            try:
                rows.append([float(cell) for cell in row])
            except ValueError as exc:
                raise DataValidationError(f"{path}:{lineno}: non-numeric cell ({exc})") from None
    if not rows:
        raise DataValidationError(f"{path}: no data rows")
    return [h.strip() for h in header], np.array(rows, dtype=np.float64)


def ingest_csv(path, target_column: str, log_transform: bool = False) -> Dataset:
    """Read a numeric CSV, fit the ball map on it, and return the training set.

    Constant feature columns are dropped (recorded, with a warning in the
    returned record) rather than rejected; real tables contain them.
    """
    header, table = _read_csv(path)
    if target_column not in header:
        raise DataValidationError(f"{path}: no column named {target_column!r}")
    t_idx = header.index(target_column)
    y_raw = table[:, t_idx]
    feat_idx = [i for i in range(len(header)) if i != t_idx]

    kept, dropped = [], []
    for i in feat_idx:
        lo, hi = float(np.min(table[:, i])), float(np.max(table[:, i]))
        if lo < hi:
            kept.append(i)
        else:
            dropped.append(header[i])
    if not kept:
        raise DataValidationError(f"{path}: every feature column is constant")

    record = PreprocessRecord(
        source="csv",
        target_transform="log1p" if log_transform else "none",
        feature_names=tuple(header[i] for i in kept),
        feature_min=tuple(float(np.min(table[:, i])) for i in kept),
        feature_max=tuple(float(np.max(table[:, i])) for i in kept),
        dropped_columns=tuple(dropped),
        target_name=target_column,
    )
    X = record.transform_X(table[:, kept])
    y = record.transform_y(y_raw)
    return Dataset(X=X, y=y, preprocessing=record)


def apply_record(record: PreprocessRecord, path, target_column: str | None = None):
    """Transform a raw CSV with an existing record (training statistics only).

    Returns (X, y) where y is None when the file lacks the target column.
    """
    header, table = _read_csv(path)
    if record.is_identity:
        X_raw = table
        if target_column is not None and target_column in header:
            t_idx = header.index(target_column)
            X_raw = np.delete(table, t_idx, axis=1)
            return X_raw, record.transform_y(table[:, t_idx])
        return X_raw, None
    missing = [name for name in record.feature_names if name not in header]
    if missing:
        raise DataValidationError(f"{path}: missing feature columns {missing}")
    cols = [header.index(name) for name in record.feature_names]
    X = record.transform_X(table[:, cols])
    name = target_column or record.target_name
    if name is not None and name in header:
        return X, record.transform_y(table[:, header.index(name)])
    return X, None


def dataset_to_csv(dataset: Dataset, path) -> None:
    """Export inputs and targets in the ingestion dialect (header, 17 digits)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        names = dataset.preprocessing.feature_names or tuple(
            f"x{i}" for i in range(dataset.d))
        target = dataset.preprocessing.target_name or "y"
        writer.writerow(list(names) + [target])
        for row, y in zip(dataset.X, dataset.y):
            writer.writerow(["%.17g" % v for v in row] + ["%.17g" % y])


def record_to_dict(record: PreprocessRecord) -> dict:
    return {
        "source": record.source,
        "target_transform": record.target_transform,
        "feature_names": list(record.feature_names) if record.feature_names else None,
        "feature_min": list(record.feature_min) if record.feature_min else None,
        "feature_max": list(record.feature_max) if record.feature_max else None,
        "dropped_columns": list(record.dropped_columns),
        "target_name": record.target_name,
        "noise_generator": record.noise_generator,
    }


def record_from_dict(doc: dict) -> PreprocessRecord:
    return PreprocessRecord(
        source=doc["source"],
        target_transform=doc.get("target_transform", "none"),
        feature_names=tuple(doc["feature_names"]) if doc.get("feature_names") else None,
        feature_min=tuple(doc["feature_min"]) if doc.get("feature_min") else None,
        feature_max=tuple(doc["feature_max"]) if doc.get("feature_max") else None,
        dropped_columns=tuple(doc.get("dropped_columns", ())),
        target_name=doc.get("target_name"),
        noise_generator=doc.get("noise_generator", NOISE_GENERATOR),
    )
