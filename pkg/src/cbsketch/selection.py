"""Hyper-parameter selection: hold-out over the grid count n, and grid search.

Hold-out follows the capacity schedule n in {1, ..., ceil(|D|^(1/(2d-1)))}
with N = ceil(n^(d-1)) tied to it; grid search evaluates an explicit
Cartesian grid over (J, n, N, tau) with N free.  Both fit candidates on
one split and score mean squared error of truncated predictions on the
other; the reported RMSE is its square root (same argmin).
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass

import numpy as np

from .basis import SketchSpec, make_spec
from .data import Dataset
from .solver import FittedModel, fit_model, predict

FLOAT_FMT = "%.17g"


@dataclass(frozen=True)
class CellScore:
    """Validation outcome of one candidate configuration on one split."""

    J: int
    n: int
    N: int
    tau: float
    split_id: int
    val_mse: float
    fit_seconds: float

    @property
    def val_rmse(self) -> float:
        return math.sqrt(self.val_mse)


@dataclass(frozen=True)
class SplitRecord:
    train_idx: np.ndarray
    val_idx: np.ndarray

    def __post_init__(self):
        tr = np.asarray(self.train_idx, dtype=np.int64)
        va = np.asarray(self.val_idx, dtype=np.int64)
        if np.intersect1d(tr, va).size:
            raise ValueError("train and validation indices overlap")
        tr.flags.writeable = False
        va.flags.writeable = False
        object.__setattr__(self, "train_idx", tr)
        object.__setattr__(self, "val_idx", va)


@dataclass(frozen=True)
class SelectionResult:
    chosen: dict
    table: tuple[CellScore, ...]
    splits: tuple[SplitRecord, ...]
    model: FittedModel


def _split(dataset: Dataset, train_fraction: float, seed) -> SplitRecord:
    p = dataset.size
    n_train = int(round(train_fraction * p))
    if n_train < 1 or n_train >= p:
        raise ValueError(
            f"split fraction {train_fraction} leaves an empty side for {p} samples"
        )
    perm = np.random.default_rng(seed).permutation(p)
    return SplitRecord(train_idx=np.sort(perm[:n_train]), val_idx=np.sort(perm[n_train:]))


def _subset(dataset: Dataset, idx: np.ndarray) -> Dataset:
    return Dataset(X=dataset.X[idx], y=dataset.y[idx],
                   preprocessing=dataset.preprocessing)


def _score_cell(train: Dataset, val: Dataset, spec: SketchSpec, lam: float):
    started = time.perf_counter()
    model = fit_model(train, spec, lam=lam)
    elapsed = time.perf_counter() - started
    errors = predict(model, val.X) - val.y
    return model, float(np.mean(errors**2)), elapsed


def holdout_select(dataset: Dataset, train_fraction: float = 0.8, J: int = 1,
                   tau: float = 0.1, m: int | None = None, lam: float = 0.0,
                   seed: int = 0, refit_full: bool = False) -> SelectionResult:
    """Pick the grid count n by hold-out, with N = ceil(n^(d-1)) tied to it.

    Candidates run over n = 1 .. ceil(|D|^(1/(2d-1))).  The returned model
    is the winning candidate fitted on the training split; pass
    refit_full=True to refit it on all of the data instead.
    """
    if dataset.size < 10:
        raise ValueError(f"hold-out needs at least 10 samples, got {dataset.size}")
    d = dataset.d
    split = _split(dataset, train_fraction, seed)
    train = _subset(dataset, split.train_idx)
    val = _subset(dataset, split.val_idx)

    n_max = math.ceil(dataset.size ** (1.0 / (2 * d - 1)))
    table = []
    models = {}
    for n in range(1, n_max + 1):
        N = math.ceil(n ** (d - 1))
        spec = make_spec(J=J, n=n, N=N, tau=tau, d=d, m=m, seed=seed)
        model, mse, secs = _score_cell(train, val, spec, lam)
        models[n] = model
        table.append(CellScore(J=J, n=n, N=N, tau=tau, split_id=0,
                               val_mse=mse, fit_seconds=secs))

    best = min(table, key=lambda c: (c.val_mse, c.n, c.J, c.tau))
    model = models[best.n]
    if refit_full:
        model = fit_model(dataset, model.spec, lam=lam)
    chosen = {"J": best.J, "n": best.n, "N": best.N, "tau": best.tau, "lam": lam}
    return SelectionResult(chosen=chosen, table=tuple(table),
                           splits=(split,), model=model)


def grid_search(dataset: Dataset, J_grid, n_grid, N_grid, tau_grid,
                train_fraction: float = 0.8, repeats: int = 1, lam: float = 0.0,
                m: int | None = None, mode: str = "equal-area", seed: int = 0,
                refit_full: bool = True) -> SelectionResult:
    """Exhaustive hold-out scoring of the Cartesian (J, n, N, tau) grid.

    Validation MSE is averaged over `repeats` independent splits; ties
    break toward smaller n, then J, then tau, then N.  The final model is
    refit on the full dataset by default (refit_full=False keeps the
    winner fitted on the last split's training side).
    """
    J_grid, n_grid = list(J_grid), list(n_grid)
    N_grid, tau_grid = list(N_grid), list(tau_grid)
    if not (J_grid and n_grid and N_grid and tau_grid):
        raise ValueError("every grid must be nonempty")
    if repeats < 1:
        raise ValueError(f"need at least one split, got {repeats}")

    master = np.random.SeedSequence(seed)
    split_seeds = master.spawn(repeats)
    sketch_seed = int(master.generate_state(1)[0])

    splits = tuple(_split(dataset, train_fraction, s) for s in split_seeds)
    sides = [(_subset(dataset, s.train_idx), _subset(dataset, s.val_idx)) for s in splits]

    table = []
    cells = {}
    last_models = {}
    for J in J_grid:
        for n in n_grid:
            for N in N_grid:
                for tau in tau_grid:
                    spec = make_spec(J=J, n=n, N=N, tau=tau, d=dataset.d,
                                     m=m, mode=mode, seed=sketch_seed)
                    mses = []
                    for split_id, (train, val) in enumerate(sides):
                        model, mse, secs = _score_cell(train, val, spec, lam)
                        table.append(CellScore(J=J, n=n, N=N, tau=tau,
                                               split_id=split_id, val_mse=mse,
                                               fit_seconds=secs))
                        mses.append(mse)
                    cells[(J, n, N, tau)] = float(np.mean(mses))
                    last_models[(J, n, N, tau)] = model

    best_key = min(cells, key=lambda k: (cells[k], k[1], k[0], k[3], k[2]))
    model = last_models[best_key]
    if refit_full:
        model = fit_model(dataset, model.spec, lam=lam)
    chosen = {"J": best_key[0], "n": best_key[1], "N": best_key[2],
              "tau": best_key[3], "lam": lam, "val_mse": cells[best_key]}
    return SelectionResult(chosen=chosen, table=tuple(table),
                           splits=splits, model=model)


def table_to_csv(result: SelectionResult, path) -> None:
    """Validation table: one row per (cell, split), float cells at 17 digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["J", "n", "N", "tau", "split_id", "val_rmse", "fit_seconds"])
        for cell in result.table:
            writer.writerow([
                cell.J, cell.n, cell.N, FLOAT_FMT % cell.tau, cell.split_id,
                FLOAT_FMT % cell.val_rmse, FLOAT_FMT % cell.fit_seconds,
            ])
