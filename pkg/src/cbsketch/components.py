"""Closed-form ReLU building blocks: trapezoid locality, squaring, nested products.

Every function here is a fixed composition of relu, addition, and
multiplication by constants -- no trainable parameters, no other
primitives.  All operations accept scalars or numpy arrays (applied
elementwise) and are pure, so they are safe to call concurrently.

The arithmetic in this module is the reference evaluation order.  The
fused kernels in ``cbsketch.kernels`` repeat the same expressions token
for token so that both paths produce bit-identical float64 results;
``tests/test_basis.py`` enforces that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Operand range used by the basis assembly.  It covers trapezoid outputs
# in [0, 1], projections in [-1/2, 1/2], the constant 1, and all partial
# products that arise from those factors.
DEFAULT_OPERAND_RANGE = (-2.0, 2.0)


@dataclass(frozen=True)
class ComponentParams:
    """Depth m of the squaring ladder and the interval the bounds hold on."""

    m: int
    operand_range: tuple[float, float] = DEFAULT_OPERAND_RANGE

    def __post_init__(self):
        a, b = self.operand_range
        if self.m < 1:
            raise ValueError(f"depth m must be >= 1, got {self.m}")
        if not a < b:
            raise ValueError(f"operand range must satisfy a < b, got [{a}, {b}]")


@dataclass(frozen=True)
class TrapezoidSpec:
    """Plateau [t_lo, t_hi] with linear ramps of width tau on both sides."""

    t_lo: float
    t_hi: float
    tau: float

    def __post_init__(self):
        if not self.t_lo < self.t_hi:
            raise ValueError(f"need t_lo < t_hi, got [{self.t_lo}, {self.t_hi}]")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"overlap tau must lie in (0, 1], got {self.tau}")


def relu(t):
    """max(t, 0), the only nonlinearity used anywhere in this package."""
    return np.maximum(t, 0.0)


def trapezoid(t, spec: TrapezoidSpec):
    """Evaluate the four-relu trapezoid: 1 on the plateau, 0 outside the ramps."""
    a, b, tau = spec.t_lo, spec.t_hi, spec.tau
    return (relu(t - a + tau) - relu(t - a) - relu(t - b) + relu(t - b - tau)) / tau


def sawtooth(t, s: int):
    """s-fold self-composition of g(t) = 2*relu(t) - 4*relu(t - 1/2).

    On [0, 1] this is the sawtooth with 2**(s-1) teeth and range [0, 1];
    the same relu formula defines it on all of R.
    """
    if s < 1:
        raise ValueError(f"fold count must be >= 1, got {s}")
    g = t
    for _ in range(s):
        g = 2.0 * relu(g) - 4.0 * relu(g - 0.5)
    return g


def square_unit(t, m: int):
    """Piecewise-linear squaring on [0, 1] built from m sawtooth corrections.

    Exact at every dyadic point i / 2**m; elsewhere the error on [0, 1]
    is at most 2**(-2m-2).  Outside [0, 1] the relu formula extends the
    function linearly and the bound is void.
    """
    if m < 1:
        raise ValueError(f"depth m must be >= 1, got {m}")
    acc = t
    g = t
    scale = 0.25
    for _ in range(m):
        g = 2.0 * relu(g) - 4.0 * relu(g - 0.5)
        acc = acc - scale * g
        scale = scale * 0.25
    return acc


def square_scaled(t, params: ComponentParams):
    """Squaring on the declared range [a, b] via affine rescale to [0, 1].

    Exact at t = a and t = b; |result - t**2| <= (b-a)**2 * 2**(-2m-2)
    on [a, b].  Defined (but unguaranteed) outside the range.
    """
    a, b = params.operand_range
    w = b - a
    u = (t - a) / w
    return w * w * square_unit(u, params.m) + 2.0 * a * w * u + a * a


def _double_range(params: ComponentParams) -> ComponentParams:
    a, b = params.operand_range
    return ComponentParams(m=params.m, operand_range=(2.0 * a, 2.0 * b))


def prod2(t1, t2, params: ComponentParams):
    """Approximate t1*t2 from three squarings: ((t1+t2)^2 - t1^2 - t2^2) / 2.

    The inner sum t1 + t2 lives in [2a, 2b], so its squaring uses the
    doubled range.  Symmetric in (t1, t2) bit for bit.
    """
    inner = square_scaled(t1 + t2, _double_range(params))
    s1 = square_scaled(t1, params)
    s2 = square_scaled(t2, params)
    # s1 + s2 first: addition commutes bitwise, so swapping t1 and t2
    # returns the identical float.
    return 0.5 * (inner - (s1 + s2))


def prodJ(ts, params: ComponentParams):
    """Left-nested chain of pairwise products over a sequence of factors.

    A single factor passes through unchanged.  The nesting order is
    fixed (((t1*t2)*t3)...), so results are reproducible.
    """
    if len(ts) == 0:
        raise ValueError("product of an empty sequence is undefined")
    acc = ts[0]
    for factor in ts[1:]:
        acc = prod2(acc, factor, params)
    return acc


def product_error_bound(n_factors: int, params: ComponentParams) -> float:
    """Conservative bound c * J * 2**(-m) on the nested-product error.

    Valid when all factors and all running partial products stay inside
    the declared range.  c collects the per-pair squaring error
    3*(b-a)**2 * 2**(-2m-2) <= (3/8)*(b-a)**2 * 2**(-m) and a
    max(1, |a|, |b|)**(J-2) amplification through the remaining factors;
    measured errors sit far below it (they decay like 4**(-m)).
    """
    a, b = params.operand_range
    w = b - a
    amp = max(1.0, abs(a), abs(b)) ** max(n_factors - 2, 0)
    c = 3.0 * w * w * amp
    return c * n_factors * 2.0 ** (-params.m)
