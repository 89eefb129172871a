"""Empirical checks of the ball-volume regularity conditions.

* Ahlfors regularity: c1^-1 r^d <= v(y, r) <= c1 r^d.
* Lipschitz radius dependence: |v(y, r1) - v(y, r2)| <= c2 |r1 - r2|.
* Bishop-Gromov comparison on round spheres, in intrinsic (unnormalized)
  units: cap area over the volume of the hyperbolic ball of curvature -k^2 is
  non-increasing in the radius.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import InvalidArgumentError, UnsupportedSpaceError

# Ricci curvature of a round sphere is positive, so every k >= 0 is admissible.
SPHERE_CURVATURE_THRESHOLD = 0.0


@dataclass
class ConditionReport:
    space: str
    d_hat: float
    c1_hat: float
    c2_hat: float
    r_grid: list = field(default_factory=list)


def default_r_grid(n=24):
    """Log-spaced radii in [1e-3, 0.3].

    Regularity is a small-radius property; on high-dimensional spheres the cap
    volume bends away from r**d at large radii and would bias the exponent fit.
    """
    return np.geomspace(1e-3, 0.3, n)


def _check_grid(r_grid):
    r = np.asarray(r_grid, dtype=float)
    if r.ndim != 1 or len(r) < 8:
        raise InvalidArgumentError("r_grid needs at least 8 radii")
    if np.any((r <= 0.0) | (r >= 1.0)):
        raise InvalidArgumentError("r_grid must lie in (0, 1)")
    ratios = r[1:] / r[:-1]
    if np.any(ratios <= 1.0) or np.ptp(np.log(ratios)) > 1e-9 * abs(np.log(ratios)).max():
        raise InvalidArgumentError("r_grid must be increasing and log-spaced")
    return r


def fit_condition_a(space, n_centers=16, r_grid=None, rng=None):
    """Fit the Ahlfors exponent and constant.

    ``d_hat`` is the least-squares slope of log v against log r pooled over
    ``n_centers`` random centers; ``c1_hat`` is the worst two-sided ratio
    between v and r**d_hat on the grid.
    """
    r = _check_grid(default_r_grid() if r_grid is None else r_grid)
    rng = np.random.default_rng(0) if rng is None else rng
    centers = space.sample(rng, n_centers)
    vols = np.array([space.ball_volume(r, y) for y in centers])
    log_r = np.tile(np.log(r), n_centers)
    d_hat, _ = np.polyfit(log_r, np.log(vols.ravel()), 1)
    ratio = vols / r[None, :] ** d_hat
    c1_hat = float(max(ratio.max(), (1.0 / ratio).max()))
    return float(d_hat), c1_hat


def fit_condition_b(space, n_samples=1000, rng=None, n_sweep=10001):
    """Largest observed slope |dv|/|dr| over random radius pairs and a derivative sweep."""
    if n_samples < 1000:
        raise InvalidArgumentError("n_samples must be at least 1000")
    rng = np.random.default_rng(0) if rng is None else rng
    ys = space.sample(rng, n_samples)
    r1 = rng.random(n_samples)
    r2 = rng.random(n_samples)
    keep = r1 != r2
    dv = np.abs(space.ball_volume(r1, ys) - space.ball_volume(r2, ys))
    sampled = float((dv[keep] / np.abs(r1 - r2)[keep]).max())
    sweep = float(space.ball_volume_derivative(np.linspace(0.0, 1.0, n_sweep)).max())
    return max(sampled, sweep)


def fit_conditions(space, n_centers=16, r_grid=None, n_samples=1000, rng=None):
    r = default_r_grid() if r_grid is None else np.asarray(r_grid)
    d_hat, c1_hat = fit_condition_a(space, n_centers, r, rng)
    c2_hat = fit_condition_b(space, n_samples, rng)
    return ConditionReport(str(space), d_hat, c1_hat, c2_hat, [float(v) for v in r])


def unit_sphere_area(d):
    """(d-1)-dimensional area of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / special.gamma(d / 2.0)


def _quad(f, a, b):
    value, _ = integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)
    return value


def model_volume(d, k, r):
    """Volume of a ball of radius ``r`` in the d-dimensional space of curvature -k^2."""
    if k < 0 or r < 0:
        raise InvalidArgumentError("k and r must be nonnegative")
    if k == 0:
        return unit_sphere_area(d) * r**d / d
    return unit_sphere_area(d) * _quad(lambda u: (math.sinh(k * u) / k) ** (d - 1), 0.0, r)


def intrinsic_cap_volume(d, r):
    """Volume of a geodesic ball of radius ``r`` on the unit sphere S^d."""
    r = min(r, math.pi)
    return unit_sphere_area(d) * _quad(lambda t: math.sin(t) ** (d - 1), 0.0, r)


def to_intrinsic_radius(r):
    """Normalized sphere radius in [0, 1] to geodesic radius on the unit sphere."""
    return math.pi * r


def to_normalized_radius(r):
    return r / math.pi


@dataclass
class MonotonicityReport:
    space: str
    k: float
    r_grid: np.ndarray
    ratios: np.ndarray
    max_increase: float
    start_ratio: float

    @property
    def non_increasing(self):
        return self.max_increase <= 1e-9


def bishop_gromov_ratio(d, k, r):
    return intrinsic_cap_volume(d, r) / model_volume(d, k, r)


def bishop_gromov_check(space, k, r_grid):
    """Ratio of cap volume to model volume over intrinsic radii in (0, pi]."""
    if space.kind != "sphere":
        raise UnsupportedSpaceError("the comparison check is implemented for spheres only")
    if k < SPHERE_CURVATURE_THRESHOLD:
        raise InvalidArgumentError("k must be nonnegative")
    r = np.asarray(r_grid, dtype=float)
    if np.any((r <= 0.0) | (r > math.pi)) or np.any(np.diff(r) <= 0):
        raise InvalidArgumentError("radii must increase within (0, pi]")
    ratios = np.array([bishop_gromov_ratio(space.d, k, v) for v in r])
    increase = float(np.max(np.diff(ratios), initial=0.0))
    return MonotonicityReport(str(space), float(k), r, ratios, increase, float(ratios[0]))
