"""Command-line surface.

Subcommands: components-check, sphere-gen, fit, predict, select, bench.
Exit codes: 0 success, 1 usage or bad configuration, 2 data validation,
3 numerical failure (including failed self-checks).  The default output
directory comes from $CBSKETCH_OUT (falling back to the working
directory); every command writes only inside its output directory or to
the explicitly named files.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, components
from .basis import make_spec
from .bench import BenchConfig, BenchInterrupted, run_experiment, write_report
from .data import DataValidationError, Dataset, apply_record, ingest_csv
from .selection import FLOAT_FMT, grid_search, holdout_select, table_to_csv
from .solver import (
    NumericalError,
    fit_model,
    model_from_json,
    model_to_json,
    predict,
    rmse,
)
from .sphere import eq_points, random_points

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


class UsageError(Exception):
    pass


class CheckFailure(Exception):
    """A self-check measured something outside its asserted bound."""


def _out_dir(ns) -> Path:
    out = getattr(ns, "out_dir", None) or os.environ.get("CBSKETCH_OUT") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_config(ns):
    doc = {}
    if getattr(ns, "config", None):
        with open(ns.config, encoding="utf-8") as fh:
            doc = json.load(fh)
    for item in getattr(ns, "set", None) or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            doc[key] = json.loads(raw)
        except json.JSONDecodeError:
            doc[key] = raw
    return doc


# ---------------------------------------------------------------- components


def _square_sup_error(m: int, grid: np.ndarray) -> float:
    return float(np.max(np.abs(components.square_unit(grid, m) - grid**2)))


def _product_max_error(m: int, n_tuples: int, rng) -> float:
    params = components.ComponentParams(m=m, operand_range=(0.0, 1.0))
    ts = rng.random((n_tuples, 3))
    approx = components.prodJ([ts[:, 0], ts[:, 1], ts[:, 2]], params)
    return float(np.max(np.abs(approx - ts[:, 0] * ts[:, 1] * ts[:, 2])))


def _trapezoid_branch_error(tau: float) -> float:
    lo, hi = -0.2, 0.3
    spec = components.TrapezoidSpec(t_lo=lo, t_hi=hi, tau=tau)
    t = np.concatenate([
        np.linspace(lo - 2 * tau, hi + 2 * tau, 4001),
        np.array([lo, hi, lo - tau, hi + tau]),
    ])
    got = components.trapezoid(t, spec)
    want = np.select(
        [(t >= lo) & (t <= hi), t >= hi + tau, t <= lo - tau, t > hi],
        [1.0, 0.0, 0.0, (hi + tau - t) / tau],
        default=(t - lo + tau) / tau,
    )
    return float(np.max(np.abs(got - want)))


def cmd_components_check(ns) -> int:
    m_lo, m_hi = ns.m_range
    if m_lo < 1 or m_hi < m_lo:
        raise UsageError(f"bad m range {ns.m_range}")
    grid = np.linspace(0.0, 1.0, ns.grid_density)
    rng = np.random.default_rng(ns.seed)
    rows = []
    previous = {}
    failures = []

    for m in range(m_lo, m_hi + 1):
        sq = _square_sup_error(m, grid)
        pr = _product_max_error(m, 10_000, rng)
        for name, err, want_ratio in (("square", sq, 3.0), ("product", pr, 1.9)):
            ratio = previous[name] / err if name in previous else float("nan")
            rows.append({"component": name, "m": m, "tau": "", "sup_error": err,
                         "decay_ratio": ratio})
            if name in previous and not ratio >= want_ratio:
                failures.append(f"{name} error ratio {ratio:.3f} < {want_ratio} at m={m}")
            previous[name] = err
        expected = 2.0 ** (-2 * m - 2)
        if abs(sq - expected) > 1e-5:
            failures.append(f"square sup error {sq:.3e} != 2^(-2m-2) at m={m}")

    for tau in ns.taus:
        err = _trapezoid_branch_error(tau)
        rows.append({"component": "trapezoid", "m": "", "tau": tau,
                     "sup_error": err, "decay_ratio": float("nan")})
        if err > 1e-12:
            failures.append(f"trapezoid branch deviation {err:.3e} at tau={tau}")

    out = _out_dir(ns) / "components_check.csv"
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["component", "m", "tau", "sup_error", "decay_ratio"])
        for row in rows:
            writer.writerow([
                row["component"], row["m"],
                FLOAT_FMT % row["tau"] if row["tau"] != "" else "",
                FLOAT_FMT % row["sup_error"], FLOAT_FMT % row["decay_ratio"],
            ])
    print(f"wrote {out}")
    if failures:
        for f in failures:
            print(f"FAIL: {f}", file=sys.stderr)
        raise CheckFailure(f"{len(failures)} component checks failed")
    print(f"all component checks passed ({len(rows)} rows)")
    return 0


# ---------------------------------------------------------------- sphere-gen


def cmd_sphere_gen(ns) -> int:
    if ns.mode == "equal-area":
        directions = eq_points(ns.dimension, ns.count)
    else:
        directions = random_points(ns.dimension, ns.count, seed=ns.seed)
    out = Path(ns.out) if ns.out else _out_dir(ns) / "directions.csv"
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(ns.dimension)])
        for row in directions.points:
            writer.writerow([FLOAT_FMT % v for v in row])
    print(f"wrote {out} ({ns.count} points on S^{ns.dimension - 1})")
    return 0


# ---------------------------------------------------------------- fit / predict


def _dataset_from_config(ns, doc) -> Dataset:
    target_column = doc.get("target_column")
    if not target_column:
        raise UsageError("config must name target_column")
    if doc.get("preprocess", "minmax-ball") == "none":
        from .data import PreprocessRecord, _read_csv
        header, table = _read_csv(ns.data)
        if target_column not in header:
            raise DataValidationError(f"{ns.data}: no column named {target_column!r}")
        t_idx = header.index(target_column)
        X = np.delete(table, t_idx, axis=1)
        record = PreprocessRecord(source="csv", target_name=target_column)
        return Dataset(X=X, y=table[:, t_idx], preprocessing=record)
    return ingest_csv(ns.data, target_column, bool(doc.get("log_transform", False)))


def cmd_fit(ns) -> int:
    doc = _load_config(ns)
    train = _dataset_from_config(ns, doc)
    spec = make_spec(
        J=int(doc.get("J", 1)), n=int(doc.get("n", 4)), N=int(doc.get("N", 40)),
        tau=float(doc.get("tau", 0.1)), d=train.d,
        m=doc.get("m"), mode=doc.get("mode", "equal-area"),
        seed=int(doc.get("seed", 0)),
    )
    model = fit_model(train, spec, lam=float(doc.get("lam", 0.0)))
    Path(ns.model).write_text(model_to_json(model), encoding="utf-8")
    train_rmse = rmse(predict(model, train.X), train.y)
    print(f"wrote {ns.model} (dimension {spec.dimension}, training RMSE {train_rmse:.6g})")
    return 0


def cmd_predict(ns) -> int:
    model = model_from_json(Path(ns.model).read_text(encoding="utf-8"))
    X, y = apply_record(model.preprocessing, ns.data,
                        model.preprocessing.target_name)
    yhat = predict(model, X)
    with open(ns.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "prediction"])
        for i, v in enumerate(yhat):
            writer.writerow([i, FLOAT_FMT % v])
    msg = f"wrote {ns.out} ({yhat.size} predictions)"
    if y is not None:
        msg += f", RMSE vs target column: {rmse(yhat, y):.6g}"
    print(msg)
    return 0


# ---------------------------------------------------------------- select


def cmd_select(ns) -> int:
    doc = _load_config(ns)
    train = _dataset_from_config(ns, doc)
    method = doc.get("method", "holdout")
    out = _out_dir(ns)
    if method == "holdout":
        result = holdout_select(
            train, train_fraction=float(doc.get("split_fraction", 0.8)),
            J=int(doc.get("J", 1)), tau=float(doc.get("tau", 0.1)),
            m=doc.get("m"), lam=float(doc.get("lam", 0.0)),
            seed=int(doc.get("seed", 0)),
            refit_full=bool(doc.get("refit_full", False)),
        )
    elif method == "grid":
        result = grid_search(
            train, J_grid=doc.get("J_grid", [1, 2, 3]),
            n_grid=doc.get("n_grid", [2, 4, 6]),
            N_grid=doc.get("N_grid", [20, 60]),
            tau_grid=doc.get("tau_grid", [0.01, 0.1]),
            train_fraction=float(doc.get("split_fraction", 0.8)),
            repeats=int(doc.get("repeats", 1)), lam=float(doc.get("lam", 0.0)),
            m=doc.get("m"), mode=doc.get("mode", "equal-area"),
            seed=int(doc.get("seed", 0)),
            refit_full=bool(doc.get("refit_full", True)),
        )
    else:
        raise UsageError(f"unknown selection method {method!r}")
    table_to_csv(result, out / "selection_table.csv")
    (out / "selection_model.json").write_text(model_to_json(result.model),
                                              encoding="utf-8")
    (out / "selection_chosen.json").write_text(json.dumps(result.chosen, indent=2),
                                               encoding="utf-8")
    print(f"chosen: {result.chosen}")
    print(f"wrote {out / 'selection_table.csv'}, selection_model.json, selection_chosen.json")
    return 0


# ---------------------------------------------------------------- bench


def cmd_bench(ns) -> int:
    doc = _load_config(ns)
    doc["experiment"] = ns.experiment
    if ns.full:
        doc["full"] = True
    try:
        cfg = BenchConfig.from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    try:
        report = run_experiment(cfg)
    except BenchInterrupted as exc:
        # flush whatever finished before surfacing the original failure
        for path in write_report(exc.report, _out_dir(ns)):
            print(f"wrote partial {path}", file=sys.stderr)
        raise exc.cause
    written = write_report(report, _out_dir(ns))
    for path in written:
        print(f"wrote {path}")
    for entry in report.summary:
        print(entry)
    return 0


# ---------------------------------------------------------------- main


def build_parser() -> _Parser:
    parser = _Parser(prog="cbsketch", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("components-check", help="measure component error laws")
    p.add_argument("--m-range", type=int, nargs=2, default=(1, 8), metavar=("LO", "HI"))
    p.add_argument("--grid-density", type=int, default=100_001)
    p.add_argument("--taus", type=float, nargs="+", default=[0.001, 0.01, 0.1])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_components_check)

    p = sub.add_parser("sphere-gen", help="emit a direction set as CSV")
    p.add_argument("--dimension", "-d", type=int, required=True)
    p.add_argument("--count", "-N", type=int, required=True)
    p.add_argument("--mode", choices=("equal-area", "random"), default="equal-area")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_sphere_gen)

    p = sub.add_parser("fit", help="fit a model from a config and a CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("select", help="hold-out or grid-search selection")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("bench", help="run a benchmark experiment")
    p.add_argument("--experiment", required=True,
                   choices=("sim2", "sim3", "sim4", "real"))
    p.add_argument("--config", default=None)
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--full", action="store_true",
                   help="use the complete grids instead of the desk-scale defaults")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        return ns.func(ns)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataValidationError as exc:
        print(f"data validation error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except CheckFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
