"""Regression on a fixed basis of ReLU components over sphere directions."""

__version__ = "0.1.0"

from .basis import FeatureIndex, SketchSpec, design_matrix, feature_value, make_spec
from .components import ComponentParams, TrapezoidSpec, prod2, prodJ, relu, sawtooth, square_scaled, square_unit, trapezoid
from .data import Dataset, PreprocessRecord, ingest_csv, make_dataset, sample_ball, synth_f1, synth_f2
from .selection import SelectionResult, grid_search, holdout_select
from .solver import FittedModel, fit, fit_model, predict, rmse, truncate
from .sphere import DirectionSet, EnergyConfig, eq_points, random_points, riesz_energy

__all__ = [
    "ComponentParams", "TrapezoidSpec", "relu", "trapezoid", "sawtooth",
    "square_unit", "square_scaled", "prod2", "prodJ",
    "DirectionSet", "EnergyConfig", "eq_points", "random_points", "riesz_energy",
    "SketchSpec", "FeatureIndex", "make_spec", "feature_value", "design_matrix",
    "FittedModel", "truncate", "fit", "fit_model", "predict", "rmse",
    "SelectionResult", "holdout_select", "grid_search",
    "Dataset", "PreprocessRecord", "sample_ball", "synth_f1", "synth_f2",
    "make_dataset", "ingest_csv",
    "__version__",
]
