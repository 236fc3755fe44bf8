"""Benchmark harness: synthetic sketching experiments and real-data runs.

Experiments
-----------
sim2   equal-area versus random sketching at J = 1 across noise levels
sim3   effect of the product order J (per-J grid search) across noise levels
sim4   full grid search for both sketch modes: accuracy and fit time
real   grid search on an ingested CSV with a held-out test CSV

Every run is driven by one master seed; trial seeds, data seeds, and
sketch seeds derive from it, so rerunning a command reproduces every CSV
byte for byte.  Wall-clock timings are inherently unrepeatable and are
reported only in the JSON report, never in CSV.
"""

from __future__ import annotations

import csv
import json
import math
import platform
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .data import Dataset, ingest_csv, make_dataset
from .selection import FLOAT_FMT, grid_search
from .solver import predict, rmse

DESK_GRIDS = {
    "J": [1, 2, 3, 4, 5],
    "n": [1, 2, 4, 6, 8, 10],
    "N": [10, 20, 40, 80, 160],
    "tau": [0.01, 0.1, 0.3],
}

FULL_GRIDS = {
    "J": [1, 2, 3, 4, 5],
    "n": list(range(1, 11)),
    "N": list(range(10, 401, 10)),
    "tau": [0.001, 0.01, 0.1, 0.3, 0.5],
    "noise": [0.0, 0.01, 0.1, 0.3, 0.5],
}


@dataclass
class BenchConfig:
    experiment: str = "sim3"
    master_seed: int = 20240801
    trials: int = 5
    train_size: int = 2000
    test_size: int = 1000
    target: str = "f1"
    noise_levels: tuple = (0.0, 0.01, 0.1)
    J_grid: tuple = tuple(DESK_GRIDS["J"])
    n_grid: tuple = tuple(DESK_GRIDS["n"])
    N_grid: tuple = tuple(DESK_GRIDS["N"])
    tau_grid: tuple = tuple(DESK_GRIDS["tau"])
    split_fraction: float = 0.8
    repeats: int = 1
    lam: float = 0.0
    m: int | None = None
    full: bool = False
    train_csv: str | None = None
    test_csv: str | None = None
    target_column: str | None = None
    log_transform: bool = False

    def __post_init__(self):
        if self.full:
            self.J_grid = tuple(FULL_GRIDS["J"])
            self.n_grid = tuple(FULL_GRIDS["n"])
            self.N_grid = tuple(FULL_GRIDS["N"])
            self.tau_grid = tuple(FULL_GRIDS["tau"])
            self.noise_levels = tuple(FULL_GRIDS["noise"])
        if self.trials < 1:
            raise ValueError(f"trial count must be >= 1, got {self.trials}")

    @staticmethod
    def from_dict(doc: dict) -> "BenchConfig":
        known = {f for f in BenchConfig.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        doc = dict(doc)
        for key in ("noise_levels", "J_grid", "n_grid", "N_grid", "tau_grid"):
            if key in doc:
                doc[key] = tuple(doc[key])
        return BenchConfig(**doc)


@dataclass
class BenchReport:
    experiment: str
    config: dict
    trial_count: int
    rows: list = field(default_factory=list)       # raw per-trial selections
    cells: list = field(default_factory=list)      # raw per-trial validation table
    summary: list = field(default_factory=list)    # aggregated mean/std
    selected: list = field(default_factory=list)   # optimum per experiment group
    timing: dict = field(default_factory=dict)     # wall clock, JSON only
    environment: dict = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "experiment": self.experiment,
            "config": self.config,
            "trial_count": self.trial_count,
            "rows": self.rows,
            "summary": self.summary,
            "selected": self.selected,
            "timing": self.timing,
            "environment": self.environment,
        }
        return json.dumps(doc, indent=2)


def _environment(cfg: BenchConfig) -> dict:
    import numba
    import scipy
    return {
        "package_version": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "platform": platform.platform(),
        "master_seed": cfg.master_seed,
        "trials": cfg.trials,
    }


def _trial_seed(master_seed: int, *path: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=tuple(path))


def _seed_int(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1)[0])


def _synthetic_pair(cfg: BenchConfig, delta: float, trial: int):
    """Noisy training set and clean test set for one trial."""
    base = _trial_seed(cfg.master_seed, int(round(delta * 1000)), trial)
    train_ss, test_ss = base.spawn(2)
    train = make_dataset(cfg.target, cfg.train_size, delta, seed=_seed_int(train_ss))
    test = make_dataset(cfg.target, cfg.test_size, 0.0, seed=_seed_int(test_ss))
    return train, test


def _run_cellwise(cfg: BenchConfig, train: Dataset, test: Dataset, J_grid,
                  mode: str, seed: int):
    """Grid search on the training set, then refit and score on the test set."""
    result = grid_search(
        train, J_grid=J_grid, n_grid=cfg.n_grid, N_grid=cfg.N_grid,
        tau_grid=cfg.tau_grid, train_fraction=cfg.split_fraction,
        repeats=cfg.repeats, lam=cfg.lam, m=cfg.m, mode=mode, seed=seed,
        refit_full=True,
    )
    test_rmse = rmse(predict(result.model, test.X), test.y)
    return result, test_rmse


def _summarize(rows, keys, value="test_rmse"):
    groups = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row[value])
    out = []
    for key, vals in groups.items():
        entry = dict(zip(keys, key))
        entry["mean_" + value] = float(np.mean(vals))
        entry["std_" + value] = float(np.std(vals))
        entry["trials"] = len(vals)
        out.append(entry)
    return out


def _fill_sim2(cfg: BenchConfig, report: BenchReport) -> None:
    """Equal-area versus random sketching at J = 1."""
    for delta in cfg.noise_levels:
        for trial in range(cfg.trials):
            train, test = _synthetic_pair(cfg, delta, trial)
            sketch_seed = _seed_int(_trial_seed(cfg.master_seed, 91, trial))
            for mode in ("equal-area", "random"):
                result, test_rmse = _run_cellwise(cfg, train, test, [1], mode, sketch_seed)
                report.rows.append({
                    "delta": delta, "mode": mode, "trial": trial,
                    **{k: result.chosen[k] for k in ("J", "n", "N", "tau")},
                    "val_rmse": math.sqrt(result.chosen["val_mse"]),
                    "test_rmse": test_rmse,
                })
                for cell in result.table:
                    report.cells.append({
                        "delta": delta, "mode": mode, "trial": trial, "J": cell.J,
                        "n": cell.n, "N": cell.N, "tau": cell.tau,
                        "split_id": cell.split_id, "val_rmse": cell.val_rmse,
                    })
    report.summary = _summarize(report.rows, ("delta", "mode"))
    report.selected = [min((r for r in report.rows if r["delta"] == d and r["mode"] == mo),
                           key=lambda r: r["val_rmse"])
                       for d in cfg.noise_levels for mo in ("equal-area", "random")]


def _fill_sim3(cfg: BenchConfig, report: BenchReport) -> None:
    """Per-J grid search: the effect of the product order."""
    for delta in cfg.noise_levels:
        for trial in range(cfg.trials):
            train, test = _synthetic_pair(cfg, delta, trial)
            sketch_seed = _seed_int(_trial_seed(cfg.master_seed, 92, trial))
            for J in cfg.J_grid:
                result, test_rmse = _run_cellwise(cfg, train, test, [J],
                                                  "equal-area", sketch_seed)
                report.rows.append({
                    "delta": delta, "trial": trial, "J": J,
                    **{k: result.chosen[k] for k in ("n", "N", "tau")},
                    "val_rmse": math.sqrt(result.chosen["val_mse"]),
                    "test_rmse": test_rmse,
                })
                for cell in result.table:
                    report.cells.append({
                        "delta": delta, "trial": trial, "J": cell.J, "n": cell.n,
                        "N": cell.N, "tau": cell.tau, "split_id": cell.split_id,
                        "val_rmse": cell.val_rmse,
                    })
    report.summary = _summarize(report.rows, ("delta", "J"))
    report.selected = [min((r for r in report.rows if r["delta"] == d),
                           key=lambda r: r["val_rmse"]) for d in cfg.noise_levels]


def _fill_sim4(cfg: BenchConfig, report: BenchReport) -> None:
    """Best-grid accuracy and fit time for both sketch modes."""
    fit_times = report.timing.setdefault("fits", [])
    for delta in cfg.noise_levels:
        for trial in range(cfg.trials):
            train, test = _synthetic_pair(cfg, delta, trial)
            sketch_seed = _seed_int(_trial_seed(cfg.master_seed, 93, trial))
            for mode in ("equal-area", "random"):
                t_fit = time.perf_counter()
                result, test_rmse = _run_cellwise(cfg, train, test, list(cfg.J_grid),
                                                  mode, sketch_seed)
                elapsed = time.perf_counter() - t_fit
                fit_times.append({"delta": delta, "mode": mode, "trial": trial,
                                  "grid_seconds": elapsed,
                                  "refit_seconds": result.model.diagnostics.fit_seconds})
                report.rows.append({
                    "delta": delta, "mode": mode, "trial": trial,
                    **{k: result.chosen[k] for k in ("J", "n", "N", "tau")},
                    "val_rmse": math.sqrt(result.chosen["val_mse"]),
                    "test_rmse": test_rmse,
                })
    report.summary = _summarize(report.rows, ("delta", "mode"))
    report.selected = [min((r for r in report.rows if r["delta"] == d and r["mode"] == mo),
                           key=lambda r: r["val_rmse"])
                       for d in cfg.noise_levels for mo in ("equal-area", "random")]


def _fill_real(cfg: BenchConfig, report: BenchReport) -> None:
    """Grid search on an ingested CSV; scores on a held-out CSV if given."""
    if not cfg.train_csv or not cfg.target_column:
        raise ValueError("real experiment needs train_csv and target_column")
    train = ingest_csv(cfg.train_csv, cfg.target_column, cfg.log_transform)
    result = grid_search(
        train, J_grid=list(cfg.J_grid), n_grid=cfg.n_grid, N_grid=cfg.N_grid,
        tau_grid=cfg.tau_grid, train_fraction=cfg.split_fraction,
        repeats=cfg.repeats, lam=cfg.lam, m=cfg.m, mode="equal-area",
        seed=cfg.master_seed, refit_full=True,
    )
    row = {"trial": 0, **{k: result.chosen[k] for k in ("J", "n", "N", "tau")},
           "val_rmse": math.sqrt(result.chosen["val_mse"])}
    if cfg.test_csv:
        from .data import apply_record
        X_test, y_test = apply_record(train.preprocessing, cfg.test_csv,
                                      cfg.target_column)
        if y_test is None:
            raise ValueError(f"{cfg.test_csv} lacks target column {cfg.target_column!r}")
        row["test_rmse"] = rmse(predict(result.model, X_test), y_test)
    report.rows.append(row)
    for cell in result.table:
        report.cells.append({"trial": 0, "J": cell.J, "n": cell.n, "N": cell.N,
                             "tau": cell.tau, "split_id": cell.split_id,
                             "val_rmse": cell.val_rmse})
    report.summary = _summarize(report.rows, (), value="val_rmse") if "test_rmse" not in row \
        else _summarize(report.rows, ())
    report.selected = [row]


def _new_report(cfg: BenchConfig) -> BenchReport:
    config = {k: (list(v) if isinstance(v, tuple) else v)
              for k, v in cfg.__dict__.items()}
    return BenchReport(experiment=cfg.experiment, config=config,
                       trial_count=cfg.trials, environment=_environment(cfg))


class BenchInterrupted(RuntimeError):
    """Carries the partially filled report so callers can flush it."""

    def __init__(self, report: BenchReport, cause: BaseException):
        super().__init__(f"{report.experiment} aborted: {cause}")
        self.report = report
        self.cause = cause


def _guarded(fill):
    def runner(cfg: BenchConfig) -> BenchReport:
        report = _new_report(cfg)
        started = time.perf_counter()
        try:
            fill(cfg, report)
        except Exception as exc:
            # leave whatever was computed in the report so callers can flush it
            report.timing["total_seconds"] = time.perf_counter() - started
            report.timing["aborted"] = repr(exc)
            raise BenchInterrupted(report, exc) from exc
        report.timing["total_seconds"] = time.perf_counter() - started
        return report
    runner.__name__ = fill.__name__.replace("_fill_", "run_")
    runner.__doc__ = fill.__doc__
    return runner


run_sim2 = _guarded(_fill_sim2)
run_sim3 = _guarded(_fill_sim3)
run_sim4 = _guarded(_fill_sim4)
run_real = _guarded(_fill_real)

RUNNERS = {"sim2": run_sim2, "sim3": run_sim3, "sim4": run_sim4, "real": run_real}


def run_experiment(cfg: BenchConfig) -> BenchReport:
    if cfg.experiment not in RUNNERS:
        raise ValueError(f"unknown experiment {cfg.experiment!r}; "
                         f"choose from {sorted(RUNNERS)}")
    return RUNNERS[cfg.experiment](cfg)


def _write_csv(path, rows, columns):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            out = []
            for col in columns:
                v = row.get(col, "")
                out.append(FLOAT_FMT % v if isinstance(v, float) else v)
            writer.writerow(out)


def write_report(report: BenchReport, out_dir) -> list:
    """Emit results/cells/summary CSVs, SVG plots, and the JSON report."""
    from pathlib import Path
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = report.experiment
    written = []

    def cols(rows):
        seen = []
        for row in rows:
            for k in row:
                if k not in seen:
                    seen.append(k)
        return seen

    if report.rows:
        path = out / f"{stem}_results.csv"
        _write_csv(path, report.rows, cols(report.rows))
        written.append(path)
    if report.cells:
        path = out / f"{stem}_cells.csv"
        _write_csv(path, report.cells, cols(report.cells))
        written.append(path)
    if report.summary:
        path = out / f"{stem}_summary.csv"
        _write_csv(path, report.summary, cols(report.summary))
        written.append(path)
    path = out / f"{stem}_report.json"
    path.write_text(report.to_json(), encoding="utf-8")
    written.append(path)
    written.extend(plot_report(report, out))
    return written


def plot_report(report: BenchReport, out_dir) -> list:
    """Static SVG line charts backing the summary tables."""
    import matplotlib
    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "cbsketch"
    import matplotlib.pyplot as plt
    from pathlib import Path

    out = Path(out_dir)
    written = []
    stem = report.experiment
    summary = report.summary
    if not summary:
        return written

    fig, ax = plt.subplots(figsize=(6, 4))
    if stem in ("sim2", "sim4"):
        deltas = sorted({s["delta"] for s in summary})
        for mode in ("equal-area", "random"):
            ys = [next((s["mean_test_rmse"] for s in summary
                        if s["delta"] == d and s["mode"] == mode), float("nan"))
                  for d in deltas]
            ax.plot(deltas, ys, marker="o", label=mode)
        ax.set_xlabel("noise level")
        ax.set_ylabel("test RMSE")
        ax.set_yscale("log")
    elif stem == "sim3":
        deltas = sorted({s["delta"] for s in summary})
        Js = sorted({s["J"] for s in summary})
        for d in deltas:
            ys = [next((s["mean_test_rmse"] for s in summary
                        if s["delta"] == d and s["J"] == J), float("nan")) for J in Js]
            ax.plot(Js, ys, marker="o", label=f"noise {d}")
        ax.set_xlabel("product order J")
        ax.set_ylabel("test RMSE")
        ax.set_yscale("log")
    else:
        vals = [r.get("test_rmse", r.get("val_rmse")) for r in report.rows]
        ax.bar(range(len(vals)), vals)
        ax.set_xlabel("run")
        ax.set_ylabel("RMSE")
    if ax.get_legend_handles_labels()[1]:
        ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = out / f"{stem}_rmse.svg"
    fig.savefig(path, format="svg")
    plt.close(fig)
    written.append(path)
    return written
