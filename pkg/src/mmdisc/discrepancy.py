"""Local, L_p and L_inf discrepancy of point sets with respect to metric balls."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from .errors import InvalidArgumentError, UnsupportedSpaceError

# below this radius sphere counts use exact distances instead of dot-product thresholds
_SMALL_RADIUS = 1e-4
_CHUNK = 1 << 21
# the L_inf search is bound by binary searches, which are fastest when a chunk stays in cache
_LINF_CHUNK = 1 << 16


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo mean with its standard error."""

    mean: float
    std_err: float
    n_samples: int

    @classmethod
    def from_samples(cls, values):
        values = np.asarray(values, dtype=float).ravel()
        n = len(values)
        se = float(values.std(ddof=1) / math.sqrt(n)) if n >= 2 else 0.0
        return cls(float(values.mean()), se, n)

    def root(self, p):
        """The p-th root of this estimate, with a delta-method standard error."""
        if self.mean <= 0.0:
            return Estimate(0.0, 0.0, self.n_samples)
        value = self.mean ** (1.0 / p)
        return Estimate(value, value / self.mean * self.std_err / p, self.n_samples)


def _points(D):
    return D.points if hasattr(D, "points") else D


def ball_counts(space, points, ys, rs):
    """Number of points in each open ball ``B(ys[i], rs[i])``."""
    points = np.atleast_2d(space.as_points(points))
    ys = np.atleast_2d(space.as_points(ys))
    rs = np.broadcast_to(np.asarray(rs, dtype=float), (len(ys),))
    if space.kind == "circle":
        return _circle_ball_counts(points[:, 0], ys[:, 0], rs)
    counts = np.zeros(len(ys), dtype=np.int64)
    step = max(1, _CHUNK // max(1, len(points)))
    for start in range(0, len(ys), step):
        sl = slice(start, start + step)
        y, r = ys[sl], rs[sl]
        if space.kind == "sphere":
            dots = y @ points.T
            c = (dots > np.cos(np.pi * np.clip(r, 0.0, 1.0))[:, None]).sum(axis=1)
            small = r < _SMALL_RADIUS
            if np.any(small):
                dist = space.pairwise(y[small], points)
                c[small] = (dist < r[small, None]).sum(axis=1)
        else:
            c = (space.pairwise(y, points) < r[:, None]).sum(axis=1)
        c[r <= 0.0] = 0
        counts[sl] = c
    return counts


def _circle_ball_counts(t, y, r):
    # B(y, r) is the open arc (y - r/2, y + r/2) taken mod 1
    t = np.sort(np.mod(t, 1.0))
    N = len(t)
    h = np.clip(r, 0.0, None) / 2.0

    def below(b, side):
        # points of the periodic extension of t that are < b ('left') or <= b ('right')
        k = np.floor(b)
        return np.searchsorted(t, b - k, side=side) + N * k.astype(np.int64)

    counts = below(y + h, "left") - below(y - h, "right")
    counts = np.clip(counts, 0, N)
    counts[h > 0.5] = N
    counts[r <= 0.0] = 0
    return counts


def local_discrepancies(space, D, ys, rs):
    """Vectorized local discrepancy ``#(B(y,r) & D) - N v(y,r)`` over query balls."""
    pts = _points(D)
    counts = ball_counts(space, pts, ys, rs)
    return counts - len(pts) * space.ball_volume(rs)


def local_discrepancy(space, D, y, r):
    """Local discrepancy of ``D`` in the open ball ``B(y, r)``."""
    y = space.as_points(y)
    return float(local_discrepancies(space, D, y[None] if y.ndim == 1 else y, np.atleast_1d(r))[0])


def pointwise_term(space, y, r, x):
    """Contribution ``chi(B(y,r), x) - v(y,r)`` of one point to the local discrepancy."""
    return space.indicator(y, r, x) - space.ball_volume(r)


def lp_discrepancy(space, D, xi, p, n_q, rng):
    """Monte Carlo L_p discrepancy over centers from the space measure and radii from ``xi``.

    The returned mean is the p-th root of the average of ``|L|**p`` over
    ``n_q`` independent (center, radius) draws; its standard error comes from
    the delta method.
    """
    if not p > 0 or math.isinf(p):
        raise InvalidArgumentError("p must be a positive finite number")
    if n_q < 2:
        raise InvalidArgumentError("n_q must be at least 2")
    ys = space.sample(rng, n_q)
    rs = xi.sample(rng, n_q)
    values = np.abs(local_discrepancies(space, D, ys, rs)) ** p
    return Estimate.from_samples(values).root(p)


def lp_power_samples(space, D, xi, p, n_q, rng):
    """The ``n_q`` samples of ``|L|**p`` used by :func:`lp_discrepancy`."""
    ys = space.sample(rng, n_q)
    rs = xi.sample(rng, n_q)
    return np.abs(local_discrepancies(space, D, ys, rs)) ** p


def lp_discrepancy_stratified(space, D, xi, p, partition, n_radii):
    """Deterministic L_p estimate on a cell-anchor by radius-quantile grid.

    Centers are the anchors of ``partition``; radii are the ``xi`` quantiles at
    the midpoints of ``n_radii`` equal probability bins.
    """
    if not p > 0:
        raise InvalidArgumentError("p must be positive")
    anchors = partition.anchors()
    radii = xi.ppf((np.arange(n_radii) + 0.5) / n_radii)
    ys = np.repeat(anchors, n_radii, axis=0)
    rs = np.tile(radii, len(anchors))
    values = np.abs(local_discrepancies(space, D, ys, rs)) ** p
    return Estimate.from_samples(values).root(p)


@dataclass(frozen=True)
class LinfSearchConfig:
    """Candidate set of the L_inf search: a center net and a radius grid."""

    n_centers: int = 8192
    radius_jog: float = 1e-9
    n_radius_grid: int = 256

    def __post_init__(self):
        if self.n_centers < 1:
            raise InvalidArgumentError("n_centers must be at least 1")
        if not 0.0 < self.radius_jog <= 1e-6:
            raise InvalidArgumentError("radius_jog must lie in (0, 1e-6]")
        if self.n_radius_grid < 1:
            raise InvalidArgumentError("n_radius_grid must be at least 1")


def center_net(space, n):
    """First ``n`` points of an unscrambled Halton sequence mapped to the space.

    Prefixes are nested, so enlarging ``n`` only adds centers.
    """
    dim = 2 if space.kind == "sphere" else space.d
    if space.kind == "sphere" and space.d != 2:
        u = qmc.Halton(d=space.n_coords, scramble=False).random(n)
        g = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
        return g / np.linalg.norm(g, axis=1, keepdims=True)
    u = qmc.Halton(d=dim, scramble=False).random(n)
    if space.kind != "sphere":
        return u
    z = 1.0 - 2.0 * u[:, 0]
    phi = 2.0 * np.pi * u[:, 1]
    s = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


def linf_estimate(space, D, cfg=None):
    """Lower estimate of sup |L(y, r)| over a finite candidate set of balls.

    Centers are the points of ``D`` plus a nested quasi-uniform net.  For each
    center the radii are every distance to a point of ``D`` jogged by
    ``+/- radius_jog`` (the count jumps exactly there) plus a uniform grid.
    Every candidate is a genuine ball, so the result never exceeds the true
    supremum.
    """
    cfg = LinfSearchConfig() if cfg is None else cfg
    pts = np.atleast_2d(space.as_points(_points(D)))
    N = len(pts)
    centers = np.vstack([pts, center_net(space, cfg.n_centers)])
    grid = np.arange(1, cfg.n_radius_grid + 1) / cfg.n_radius_grid
    best = 0.0
    step = max(1, _LINF_CHUNK // (N + cfg.n_radius_grid))
    for start in range(0, len(centers), step):
        dist = np.sort(space.pairwise(centers[start:start + step], pts), axis=1)
        q = len(dist)
        rows = np.arange(q)[:, None]
        # rows are separated by 4 > diameter so one flat search serves all rows;
        # each radius block is sorted after the offset, which keeps the search cache friendly
        offset = 4.0 * rows
        flat = (dist + offset).ravel()
        grid_block = np.broadcast_to(grid, (q, len(grid)))
        for radii in (dist - cfg.radius_jog, dist + cfg.radius_jog, grid_block):
            idx = np.searchsorted(flat, (radii + offset).ravel(), side="left").reshape(radii.shape)
            L = (idx - N * rows) - N * space.ball_volume(radii)
            best = max(best, float(np.abs(L).max()))
    return best


def _circle_coords(D):
    pts = np.asarray(_points(D), dtype=float)
    space = getattr(D, "space", None)
    if space is not None and space.kind != "circle" and not (space.kind == "torus" and space.d == 1):
        raise UnsupportedSpaceError("exact oracles exist only on the circle")
    if pts.ndim == 2:
        if pts.shape[1] != 1:
            raise UnsupportedSpaceError("exact oracles exist only on the circle")
        pts = pts[:, 0]
    return np.sort(np.mod(pts, 1.0))


def circle_exact_l2(D):
    """Exact L_2 discrepancy on the circle for the Lebesgue radius measure.

    Two balls of radius r centered at circular distance a overlap in measure
    max(0, r - a) + max(0, r - (1 - a)); integrating over r in [0, 1] gives the
    pair kernel ((1 - a)**2 + a**2) / 2, and the cross and volume terms are
    N/3 and N**2/3.
    """
    t = _circle_coords(D)
    N = len(t)
    a = np.abs(t[:, None] - t[None, :])
    a = np.minimum(a, 1.0 - a)
    total = 0.5 * ((1.0 - a) ** 2 + a**2).sum() - N * N / 3.0
    return math.sqrt(max(total, 0.0))


def circle_exact_linf(D):
    """Exact sup over open arcs of |count - N * length| on the circle.

    The positive part is approached by arcs shrinking onto k consecutive
    points; the negative part is attained by the longest arc whose endpoints
    are two points k + 1 steps apart.
    """
    t = _circle_coords(D)
    N = len(t)
    # scaled coordinates keep lattice inputs integer-exact
    scaled = N * t
    ext = np.concatenate([scaled, scaled + N])
    idx = np.arange(N)
    best = 0.0
    for g in range(N + 1):
        span = ext[idx + g] - scaled
        if g < N:
            best = max(best, float(np.max((g + 1) - span)))
        if g >= 1:
            best = max(best, float(np.max(span - (g - 1))))
    return best
