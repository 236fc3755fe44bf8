"""Direction sets on the unit sphere S^(d-1).

``eq_points`` builds the recursive zonal equal-area partition (polar
caps, collars whose region counts come from cumulative-remainder
rounding, boundaries re-fitted so every zone holds an exact multiple of
the target area) and returns the region centers.  Those centers stand in
for approximate minimal Riesz-energy configurations; no iterative energy
minimization is performed.  ``random_points`` is the uniform baseline,
and ``riesz_energy`` the diagnostic that orders the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

_BISECT_STEPS = 80  # colatitude resolved to ~pi * 2**-80


@dataclass(frozen=True)
class EnergyConfig:
    """Riesz exponent; mu = 0 selects the logarithmic energy."""

    mu: float = 0.0

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError(f"Riesz exponent must be >= 0, got {self.mu}")


@dataclass(frozen=True)
class DirectionSet:
    """N unit vectors in R^d with the construction mode that produced them."""

    d: int
    points: np.ndarray
    mode: str
    seed: int | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != self.d:
            raise ValueError(f"points must be (N, {self.d}), got {pts.shape}")
        norms = np.linalg.norm(pts, axis=1)
        if pts.shape[0] < 1 or np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValueError("every direction must have unit norm within 1e-12")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]


def sphere_area(dim: int) -> float:
    """Surface area of S^dim embedded in R^(dim+1)."""
    return 2.0 * math.pi ** ((dim + 1) / 2.0) / math.gamma((dim + 1) / 2.0)


def cap_area(dim: int, theta: float) -> float:
    """Area of the spherical cap of colatitude theta on S^dim.

    Closed forms for dim <= 3, adaptive quadrature of sin^(dim-1) above.
    """
    if dim == 1:
        return 2.0 * theta
    if dim == 2:
        return 2.0 * math.pi * (1.0 - math.cos(theta))
    if dim == 3:
        return 2.0 * math.pi * (theta - math.sin(theta) * math.cos(theta))
    integral, _ = integrate.quad(lambda phi: math.sin(phi) ** (dim - 1), 0.0, theta)
    return sphere_area(dim - 1) * integral


def _colat_of_cap_area(dim: int, area: float) -> float:
    """Invert cap_area by bisection on [0, pi]."""
    lo, hi = 0.0, math.pi
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        if cap_area(dim, mid) < area:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class EqZones:
    """Zone bookkeeping for one equal-area partition of S^dim.

    colats[i] is the bottom colatitude of zone i (the last equals pi);
    counts[i] is how many regions zone i holds.  Zone 0 and the last
    zone are the polar caps whenever N >= 2.
    """

    dim: int
    n_regions: int
    colats: tuple[float, ...]
    counts: tuple[int, ...]

    def region_area(self) -> float:
        return sphere_area(self.dim) / self.n_regions


def eq_zones(dim: int, N: int) -> EqZones:
    """Split S^dim into caps plus collars holding N equal-area regions."""
    if dim < 1:
        raise ValueError(f"sphere dimension must be >= 1, got {dim}")
    if N < 1:
        raise ValueError(f"region count must be >= 1, got {N}")
    if N == 1:
        return EqZones(dim, 1, (math.pi,), (1,))
    if N == 2:
        return EqZones(dim, 2, (math.pi / 2.0, math.pi), (1, 1))
    if dim == 1:
        # Circle: N equal arcs; represent them as N single-region zones.
        colats = tuple((k + 1) * 2.0 * math.pi / N for k in range(N))
        return EqZones(1, N, colats, (1,) * N)

    total = sphere_area(dim)
    v_region = total / N
    theta_c = _colat_of_cap_area(dim, v_region)
    delta_ideal = v_region ** (1.0 / dim)
    n_collars = max(1, round((math.pi - 2.0 * theta_c) / delta_ideal))
    delta_fit = (math.pi - 2.0 * theta_c) / n_collars

    # Ideal (real-valued) region counts per collar, rounded so the
    # running discrepancy never exceeds 1/2 and the total lands on N - 2.
    counts = [1]
    carry = 0.0
    for i in range(1, n_collars + 1):
        top = theta_c + (i - 1) * delta_fit
        bot = theta_c + i * delta_fit
        ideal = (cap_area(dim, bot) - cap_area(dim, top)) / v_region
        m_i = max(0, round(ideal + carry))
        carry += ideal - m_i
        counts.append(m_i)
    counts.append(1)

    # Re-fit zone boundaries so each zone's area is exactly its share.
    colats = []
    cumulative = 0
    for c in counts[:-1]:
        cumulative += c
        colats.append(_colat_of_cap_area(dim, cumulative * v_region))
    colats.append(math.pi)
    return EqZones(dim, N, tuple(colats), tuple(counts))


def _eq_points_recursive(d: int, N: int) -> np.ndarray:
    if d == 2:
        # Midpoints of N equal arcs starting at angle 0.
        angles = (np.arange(N) + 0.5) * (2.0 * math.pi / N)
        return np.column_stack([np.cos(angles), np.sin(angles)])
    zones = eq_zones(d - 1, N)
    last = len(zones.counts) - 1
    points = np.empty((N, d), dtype=np.float64)
    row = 0
    top = 0.0
    for i, (bot, count) in enumerate(zip(zones.colats, zones.counts)):
        if N >= 2 and count == 1 and (i == 0 or i == last):
            pole = np.zeros(d)
            pole[-1] = 1.0 if i == 0 else -1.0
            points[row] = pole
            row += 1
        elif count > 0:
            # Collar: partition the equatorial sphere and lift the
            # centers to the collar's mid-colatitude.
            theta = 0.5 * (top + bot)
            sub = _eq_points_recursive(d - 1, count)
            points[row : row + count, :-1] = math.sin(theta) * sub
            points[row : row + count, -1] = math.cos(theta)
            row += count
        top = bot
    if N == 1:
        points[0] = 0.0
        points[0, -1] = 1.0
    return points


def eq_points(d: int, N: int) -> DirectionSet:
    """Centers of the N regions of the recursive zonal equal-area partition.

    Deterministic: collar centers sit at the collar mid-colatitude with
    no longitude offset between collars, and the circle case uses arc
    midpoints.  The polar axis is the last coordinate.
    """
    if d < 2:
        raise ValueError(f"ambient dimension must be >= 2, got {d}")
    if N < 1:
        raise ValueError(f"point count must be >= 1, got {N}")
    pts = _eq_points_recursive(d, N)
    norms = np.linalg.norm(pts, axis=1, keepdims=True)
    pts = pts / norms
    return DirectionSet(d=d, points=pts, mode="equal-area")


def random_points(d: int, N: int, seed: int) -> DirectionSet:
    """N i.i.d. uniform points on S^(d-1): normalized standard normals."""
    if d < 2:
        raise ValueError(f"ambient dimension must be >= 2, got {d}")
    if N < 1:
        raise ValueError(f"point count must be >= 1, got {N}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((N, d))
    pts = g / np.linalg.norm(g, axis=1, keepdims=True)
    return DirectionSet(d=d, points=pts, mode="random", seed=seed)


def riesz_energy(directions: DirectionSet, cfg: EnergyConfig) -> float:
    """Sum over ordered pairs of |xi_i - xi_j|**(-mu), or -log distance at mu=0."""
    pts = directions.points
    if pts.shape[0] < 2:
        raise ValueError("energy needs at least two points")
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    iu = np.triu_indices(pts.shape[0], k=1)
    pair = dist[iu]
    if np.any(pair == 0.0):
        raise ValueError("coincident points have infinite energy")
    if cfg.mu > 0:
        return 2.0 * float(np.sum(pair ** (-cfg.mu)))
    return 2.0 * float(np.sum(-np.log(pair)))


def min_pairwise_distance(directions: DirectionSet) -> float:
    pts = directions.points
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    iu = np.triu_indices(pts.shape[0], k=1)
    return float(np.min(dist[iu]))
