"""Fused numba kernels for basis evaluation and design-matrix assembly.

These repeat the reference expressions from ``cbsketch.components`` token
for token (same operations, same order) so scalar results are
bit-identical to the pure-python path.  Rows are independent, so the
matrix kernel parallelizes over them without any shared mutable state;
output bits do not depend on the thread count.
"""

from __future__ import annotations

import numpy as np
from numba import config as _numba_config
from numba import njit, prange

# the default layer probe warns about an old TBB; OpenMP is what gets used
_numba_config.THREADING_LAYER = "omp"


@njit(cache=True)
def _sg_unit(u, m):
    acc = u
    g = u
    scale = 0.25
    for _ in range(m):
        g = 2.0 * max(g, 0.0) - 4.0 * max(g - 0.5, 0.0)
        acc = acc - scale * g
        scale = scale * 0.25
    return acc


@njit(cache=True)
def _sg_scaled(t, a, b, m):
    w = b - a
    u = (t - a) / w
    return w * w * _sg_unit(u, m) + 2.0 * a * w * u + a * a


@njit(cache=True)
def _pg2(u, v, a, b, m):
    inner = _sg_scaled(u + v, 2.0 * a, 2.0 * b, m)
    s1 = _sg_scaled(u, a, b, m)
    s2 = _sg_scaled(v, a, b, m)
    return 0.5 * (inner - (s1 + s2))


@njit(cache=True)
def _pg2_cached(u, v, sg_v, a, b, m):
    # sg_v must equal _sg_scaled(v, a, b, m); caller hoists it out of loops.
    inner = _sg_scaled(u + v, 2.0 * a, 2.0 * b, m)
    s1 = _sg_scaled(u, a, b, m)
    return 0.5 * (inner - (s1 + sg_v))


@njit(cache=True)
def _trap(t, lo, hi, tau):
    return (
        max(t - lo + tau, 0.0) - max(t - lo, 0.0) - max(t - hi, 0.0) + max(t - hi - tau, 0.0)
    ) / tau


@njit(cache=True)
def _feature_scalar(t, lo, hi, tau, m, J, j, a, b):
    """One basis value: left-nested product of (trapezoid, t x j, 1 x (J-1-j))."""
    acc = _trap(t, lo, hi, tau)
    for _ in range(j):
        acc = _pg2(acc, t, a, b, m)
    for _ in range(J - 1 - j):
        acc = _pg2(acc, 1.0, a, b, m)
    return acc


@njit(cache=True)
def _project_one(xi, x):
    t = 0.0
    for c in range(x.shape[0]):
        t += xi[c] * x[c]
    return t


@njit(parallel=True, cache=True)
def _design_kernel(X, XI, grid, tau, m, J, a, b, out):
    """Fill out[i, ((j*n + k)*N + l)] with the basis values for every row.

    Shares the running prefix across j (the chains for consecutive j
    extend each other by one factor), which performs exactly the same
    operation sequence as _feature_scalar does per entry.
    """
    p, d = X.shape
    N = XI.shape[0]
    n = grid.shape[0] - 1
    for i in prange(p):
        for l in range(N):
            t = 0.0
            for c in range(d):
                t += XI[l, c] * X[i, c]
            sg_t = _sg_scaled(t, a, b, m)
            sg_one = _sg_scaled(1.0, a, b, m)
            for k in range(n):
                u = _trap(t, grid[k], grid[k + 1], tau)
                for j in range(J):
                    if j > 0:
                        u = _pg2_cached(u, t, sg_t, a, b, m)
                    v = u
                    for _ in range(J - 1 - j):
                        v = _pg2_cached(v, 1.0, sg_one, a, b, m)
                    out[i, (j * n + k) * N + l] = v


def design_matrix_values(X, XI, grid, tau, m, J, a, b):
    """Assemble the dense p x (J*n*N) matrix of basis values."""
    p = X.shape[0]
    n = grid.shape[0] - 1
    N = XI.shape[0]
    out = np.empty((p, J * n * N), dtype=np.float64)
    if p > 0:
        _design_kernel(
            np.ascontiguousarray(X, dtype=np.float64),
            np.ascontiguousarray(XI, dtype=np.float64),
            np.ascontiguousarray(grid, dtype=np.float64),
            float(tau), int(m), int(J), float(a), float(b), out,
        )
    return out


def feature_scalar(t, lo, hi, tau, m, J, j, a, b):
    """Scalar basis value at projection t; same bits as the matrix kernel."""
    return float(_feature_scalar(float(t), float(lo), float(hi), float(tau),
                                 int(m), int(J), int(j), float(a), float(b)))


def project_one(xi, x):
    """Plain-loop dot product, the projection order used by the kernels."""
    return float(_project_one(np.ascontiguousarray(xi, dtype=np.float64),
                              np.ascontiguousarray(x, dtype=np.float64)))
