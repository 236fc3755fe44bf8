"""Sketching basis: univariate component chains applied to sphere projections.

A basis element is indexed by (j, k, l): the left-nested product of the
interval-k trapezoid of t, j copies of t, and J-1-j copies of 1, all
evaluated at the projection t = xi_l . x.  The flat column order is
((j*n) + (k-1))*N + (l-1), frozen for serialization stability.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .components import DEFAULT_OPERAND_RANGE
from .data import DataValidationError
from .sphere import DirectionSet, eq_points, random_points

BALL_RADIUS = 0.5
_BALL_SLACK = 1e-12


def default_depth(n: int) -> int:
    """Component depth ceil(log2 n) + 4: squaring error well below grid error."""
    return math.ceil(math.log2(n)) + 4


def theory_overlap(n: int, J: int) -> float:
    """The analysis-driven overlap n**(-4J-1).

    Underflows trapezoid arithmetic in float64 for moderate n and J;
    exposed for completeness, not used by any default.
    """
    return float(n) ** (-4 * J - 1)


@dataclass(frozen=True)
class FeatureIndex:
    """Triple (j, k, l): power of t, interval index (1-based), direction (1-based)."""

    j: int
    k: int
    l: int

    def flat(self, n: int, N: int) -> int:
        return (self.j * n + (self.k - 1)) * N + (self.l - 1)

    @staticmethod
    def from_flat(flat: int, n: int, N: int) -> "FeatureIndex":
        l0 = flat % N
        rest = flat // N
        k0 = rest % n
        j = rest // n
        return FeatureIndex(j=j, k=k0 + 1, l=l0 + 1)


@dataclass(frozen=True)
class SketchSpec:
    """Complete description of one sketching basis."""

    J: int
    n: int
    tau: float
    m: int
    grid: np.ndarray          # t_0 < ... < t_n inside [-1/2, 1/2]
    directions: DirectionSet
    mode: str                 # "equal-area" | "random"
    seed: int | None = None
    operand_range: tuple[float, float] = DEFAULT_OPERAND_RANGE

    def __post_init__(self):
        if self.J < 1 or self.n < 1:
            raise ValueError(f"need J >= 1 and n >= 1, got J={self.J}, n={self.n}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"overlap tau must lie in (0, 1], got {self.tau}")
        if self.m < 1:
            raise ValueError(f"depth m must be >= 1, got {self.m}")
        if self.mode not in ("equal-area", "random"):
            raise ValueError(f"unknown sketch mode {self.mode!r}")
        grid = np.asarray(self.grid, dtype=np.float64)
        if grid.shape != (self.n + 1,):
            raise ValueError(f"grid must hold n+1 = {self.n + 1} points, got {grid.shape}")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if grid[0] < -BALL_RADIUS - _BALL_SLACK or grid[-1] > BALL_RADIUS + _BALL_SLACK:
            raise ValueError("grid must lie inside [-1/2, 1/2]")
        if self.mode == "equal-area":
            expected = -0.5 + np.arange(self.n + 1) / self.n
            if not np.array_equal(grid, expected):
                raise ValueError("equal-area mode requires the exact uniform grid")
        grid.flags.writeable = False
        object.__setattr__(self, "grid", grid)

    @property
    def d(self) -> int:
        return self.directions.d

    @property
    def N(self) -> int:
        return self.directions.size

    @property
    def dimension(self) -> int:
        return self.J * self.n * self.N


def make_spec(J: int, n: int, N: int, tau: float, d: int,
              m: int | None = None, mode: str = "equal-area",
              seed: int = 0) -> SketchSpec:
    """Build a basis description: grid plus direction set for either mode.

    Equal-area mode uses the exact uniform grid t_k = -1/2 + k/n and the
    zonal partition centers; random mode draws the interior grid points
    uniformly (sorted, with t_0 = -1/2) and uniform sphere directions,
    both reproducible from the seed.
    """
    if N < 1:
        raise ValueError(f"need N >= 1, got {N}")
    if m is None:
        m = default_depth(n)
    if mode == "equal-area":
        grid = -0.5 + np.arange(n + 1) / n
        directions = eq_points(d, N)
    elif mode == "random":
        grid_ss, dir_ss = np.random.SeedSequence(seed).spawn(2)
        draws = np.sort(np.random.default_rng(grid_ss).uniform(-0.5, 0.5, size=n))
        grid = np.concatenate([[-0.5], draws])
        directions = random_points(d, N, seed=int(dir_ss.generate_state(1)[0]))
    else:
        raise ValueError(f"unknown sketch mode {mode!r}")
    return SketchSpec(J=J, n=n, tau=float(tau), m=int(m), grid=grid,
                      directions=directions, mode=mode, seed=seed)


def _check_ball(X: np.ndarray, slack: float = _BALL_SLACK):
    norms = np.linalg.norm(X, axis=1)
    if norms.size and float(np.max(norms)) > BALL_RADIUS + slack:
        raise DataValidationError(
            f"input row has norm {float(np.max(norms)):.6g} outside the radius-1/2 ball"
        )


def feature_value(x, idx: FeatureIndex, spec: SketchSpec) -> float:
    """One basis value at one point; bit-identical to the design-matrix entry."""
    if not (0 <= idx.j < spec.J and 1 <= idx.k <= spec.n and 1 <= idx.l <= spec.N):
        raise ValueError(f"index {idx} outside (J={spec.J}, n={spec.n}, N={spec.N})")
    x = np.asarray(x, dtype=np.float64)
    t = kernels.project_one(spec.directions.points[idx.l - 1], x)
    a, b = spec.operand_range
    return kernels.feature_scalar(t, spec.grid[idx.k - 1], spec.grid[idx.k],
                                  spec.tau, spec.m, spec.J, idx.j, a, b)


def design_matrix(X, spec: SketchSpec) -> np.ndarray:
    """Dense p x (J*n*N) matrix; rows must lie in the radius-1/2 ball."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        return np.empty((0, spec.dimension), dtype=np.float64)
    if X.shape[1] != spec.d:
        raise DataValidationError(
            f"points have dimension {X.shape[1]}, basis expects {spec.d}"
        )
    _check_ball(X)
    a, b = spec.operand_range
    return kernels.design_matrix_values(X, spec.directions.points, spec.grid,
                                        spec.tau, spec.m, spec.J, a, b)


def spec_to_dict(spec: SketchSpec) -> dict:
    return {
        "J": spec.J,
        "n": spec.n,
        "tau": spec.tau,
        "m": spec.m,
        "grid": [float(t) for t in spec.grid],
        "d": spec.d,
        "mode": spec.mode,
        "seed": spec.seed,
        "operand_range": [spec.operand_range[0], spec.operand_range[1]],
        "directions": [[float(v) for v in row] for row in spec.directions.points],
        "direction_seed": spec.directions.seed,
    }


def spec_from_dict(doc: dict) -> SketchSpec:
    directions = DirectionSet(
        d=int(doc["d"]),
        points=np.array(doc["directions"], dtype=np.float64),
        mode=doc["mode"],
        seed=doc.get("direction_seed"),
    )
    return SketchSpec(
        J=int(doc["J"]),
        n=int(doc["n"]),
        tau=float(doc["tau"]),
        m=int(doc["m"]),
        grid=np.array(doc["grid"], dtype=np.float64),
        directions=directions,
        mode=doc["mode"],
        seed=doc.get("seed"),
        operand_range=(float(doc["operand_range"][0]), float(doc["operand_range"][1])),
    )


def spec_to_json(spec: SketchSpec) -> str:
    """JSON document; floats use shortest exact repr, so round-trips are bit-faithful."""
    return json.dumps(spec_to_dict(spec), indent=2)


def spec_from_json(text: str) -> SketchSpec:
    return spec_from_dict(json.loads(text))
