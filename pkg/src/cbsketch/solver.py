"""Coefficient fitting by (optionally ridge-stabilized) least squares.

lambda = 0 returns the minimum-Euclidean-norm minimizer with singular
values below RANK_TOL * s_max treated as zero; lambda > 0 the unique
ridge minimizer of ||phi a - y||^2 + lambda ||a||^2.  Whenever the basis
is much wider than the sample (q > 1.5 p) the solve routes through the
p x p Gram system, which yields the same solution.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .basis import SketchSpec, design_matrix, spec_from_dict, spec_to_dict
from .data import (
    DataValidationError,
    Dataset,
    PreprocessRecord,
    record_from_dict,
    record_to_dict,
)

RANK_TOL = 1e-10
GRAM_RATIO = 1.5


class NumericalError(RuntimeError):
    """Raised when a solve cannot proceed (non-finite inputs, failed factorization)."""


def truncate(t, M: float):
    """Clip to [-M, M] preserving sign: sign(t) * min(|t|, M)."""
    if M < 0:
        raise ValueError(f"truncation bound must be >= 0, got {M}")
    return np.sign(t) * np.minimum(np.abs(t), M)


def rmse(predicted, observed) -> float:
    predicted = np.asarray(predicted, dtype=np.float64)
    observed = np.asarray(observed, dtype=np.float64)
    if predicted.shape != observed.shape or predicted.size == 0:
        raise ValueError(f"length mismatch: {predicted.shape} vs {observed.shape}")
    return float(np.sqrt(np.mean((predicted - observed) ** 2)))


def _min_norm_gram(phi: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, int]:
    """Minimum-norm solution a = phi^T K^+ y through the Gram matrix K = phi phi^T."""
    K = phi @ phi.T
    try:
        c = sla.cho_solve(sla.cho_factor(K, lower=True), y)
        rank = phi.shape[0]
    except np.linalg.LinAlgError:
        # Rank-deficient rows: spectral pseudo-inverse with the relative cutoff
        # on singular values of phi (eigenvalues of K are their squares).
        vals, vecs = np.linalg.eigh(K)
        keep = vals > (RANK_TOL ** 2) * max(float(vals[-1]), 0.0)
        c = vecs[:, keep] @ ((vecs[:, keep].T @ y) / vals[keep])
        rank = int(np.sum(keep))
    return phi.T @ c, rank


def _fit_impl(phi: np.ndarray, y: np.ndarray, lam: float) -> tuple[np.ndarray, int]:
    phi = np.asarray(phi, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if phi.ndim != 2 or y.ndim != 1 or phi.shape[0] != y.shape[0]:
        raise ValueError(f"shape mismatch: phi {phi.shape}, y {y.shape}")
    if phi.shape[0] < 1 or phi.shape[1] < 1:
        raise ValueError("need at least one row and one column")
    if lam < 0:
        raise ValueError(f"ridge weight must be >= 0, got {lam}")
    if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(y))):
        raise NumericalError("design matrix or targets contain non-finite entries")
    p, q = phi.shape
    dual = q > GRAM_RATIO * p
    if lam == 0.0:
        if dual:
            return _min_norm_gram(phi, y)
        coef, _, rank, _ = np.linalg.lstsq(phi, y, rcond=RANK_TOL)
        return coef, int(rank)
    if dual:
        K = phi @ phi.T
        K[np.diag_indices_from(K)] += lam
        return phi.T @ sla.solve(K, y, assume_a="pos"), min(p, q)
    G = phi.T @ phi
    G[np.diag_indices_from(G)] += lam
    return sla.solve(G, phi.T @ y, assume_a="pos"), min(p, q)


def fit(phi: np.ndarray, y: np.ndarray, lam: float = 0.0) -> np.ndarray:
    """Solve for basis coefficients; see module docstring for the two regimes."""
    coef, _ = _fit_impl(phi, y, lam)
    return coef


@dataclass(frozen=True)
class FitDiagnostics:
    residual_norm: float
    effective_rank: int
    fit_seconds: float


@dataclass(frozen=True)
class FittedModel:
    """Basis description plus coefficients, truncation bound, and provenance."""

    spec: SketchSpec
    coefficients: np.ndarray
    M: float
    preprocessing: PreprocessRecord
    diagnostics: FitDiagnostics

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=np.float64)
        if coef.shape != (self.spec.dimension,):
            raise ValueError(
                f"coefficient length {coef.shape} does not match basis dimension "
                f"{self.spec.dimension}"
            )
        coef.flags.writeable = False
        object.__setattr__(self, "coefficients", coef)


def fit_model(train: Dataset, spec: SketchSpec, lam: float = 0.0) -> FittedModel:
    """Assemble the design matrix on the training set and fit coefficients.

    The truncation bound M is the largest absolute training target and is
    never taken from anything else.
    """
    if train.size == 0:
        raise ValueError("cannot fit on an empty dataset")
    started = time.perf_counter()
    phi = design_matrix(train.X, spec)
    coef, effective_rank = _fit_impl(phi, train.y, lam)
    elapsed = time.perf_counter() - started
    residual = float(np.linalg.norm(phi @ coef - train.y))
    return FittedModel(
        spec=spec,
        coefficients=coef,
        M=float(np.max(np.abs(train.y))),
        preprocessing=train.preprocessing,
        diagnostics=FitDiagnostics(residual, effective_rank, elapsed),
    )


def predict(model: FittedModel, X) -> np.ndarray:
    """Truncated predictions; every value is bounded by M in absolute value."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    norms = np.linalg.norm(X, axis=1)
    if norms.size and float(np.max(norms)) > 0.5 + 1e-9:
        raise DataValidationError(
            f"prediction input has norm {float(np.max(norms)):.6g} outside the ball"
        )
    phi = design_matrix(X, model.spec)
    return truncate(phi @ model.coefficients, model.M)


def model_to_dict(model: FittedModel) -> dict:
    return {
        "spec": spec_to_dict(model.spec),
        "coefficients": [float(c) for c in model.coefficients],
        "M": model.M,
        "preprocessing": record_to_dict(model.preprocessing),
        "diagnostics": {
            "residual_norm": model.diagnostics.residual_norm,
            "effective_rank": model.diagnostics.effective_rank,
            "fit_seconds": model.diagnostics.fit_seconds,
        },
    }


def model_from_dict(doc: dict) -> FittedModel:
    diag = doc["diagnostics"]
    return FittedModel(
        spec=spec_from_dict(doc["spec"]),
        coefficients=np.array(doc["coefficients"], dtype=np.float64),
        M=float(doc["M"]),
        preprocessing=record_from_dict(doc["preprocessing"]),
        diagnostics=FitDiagnostics(
            residual_norm=float(diag["residual_norm"]),
            effective_rank=int(diag["effective_rank"]),
            fit_seconds=float(diag["fit_seconds"]),
        ),
    )


def model_to_json(model: FittedModel) -> str:
    return json.dumps(model_to_dict(model), indent=2)


def model_from_json(text: str) -> FittedModel:
    return model_from_dict(json.loads(text))
