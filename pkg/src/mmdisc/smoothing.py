"""Cell-and-interval averaging kernels and the a priori L_inf bound.

The kernel of order ``m`` averages a function of a ball ``(y, r)`` over the
partition cell containing ``y`` and the radius interval ``((i-1)/m, i/m]``
containing ``r``.  Averaged balls bracket the original one after a radius
shift ``eps_m = 2 c8 m**(-1/d)``, which turns an L_p bound into an L_inf bound:

    L_inf <= 2 m**(2/p) L_p[Lebesgue] + 4 c2 c8 N m**(-1/d).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discrepancy import Estimate, LinfSearchConfig, linf_estimate, local_discrepancies, lp_discrepancy
from .errors import InvalidArgumentError
from .partition import audit_partition, build_partition
from .space import RadialMeasure


@dataclass(frozen=True, eq=False)
class SmoothingGrid:
    partition: object
    m: int
    eps_m: float
    c8_hat: float

    @classmethod
    def build(cls, partition, c8_hat=None):
        """Grid on ``partition``; ``c8_hat`` defaults to the audited diameter constant."""
        if c8_hat is None:
            c8_hat = audit_partition(partition).c8_hat
        # the interval length 1/m must also fit under c8 m^(-1/d)
        c8_hat = max(1.0, float(c8_hat))
        m = partition.m
        return cls(partition, m, 2.0 * c8_hat * m ** (-1.0 / partition.space.d), c8_hat)

    @property
    def space(self):
        return self.partition.space

    def interval_index(self, r):
        """Index ``i`` (0-based) of the radius interval ``(i/m, (i+1)/m]`` holding ``r``."""
        r = np.asarray(r, dtype=float)
        if np.any((r <= 0.0) | (r > 1.0)):
            raise InvalidArgumentError("radius intervals cover (0, 1] only")
        return np.minimum(np.ceil(r * self.m).astype(int) - 1, self.m - 1)


def kernel_value(grid, y, z, r, u):
    """``m**2`` when ``y, z`` share a cell and ``r, u`` share a radius interval, else 0."""
    part = grid.partition
    same_cell = part.locate(y)[0] == part.locate(z)[0]
    same_interval = grid.interval_index(r) == grid.interval_index(u)
    return float(grid.m**2) if same_cell and same_interval else 0.0


def kernel_mass(grid):
    """Integral of the kernel over (z, u) for a fixed (y, r), from exact cell data.

    The nonzero region is one cell times one interval, both of measure 1/m.
    """
    cell = grid.partition.measures()[0]
    return grid.m * cell * grid.m * (1.0 / grid.m)


def kernel_qnorm(m, p):
    """L_q norm of the kernel in (z, u), where 1/p + 1/q = 1; equals m**(2/p)."""
    if not p > 1:
        raise InvalidArgumentError("p must exceed 1")
    q = p / (p - 1.0)
    support = (1.0 / m) * (1.0 / m)
    return (float(m) ** (2 * q) * support) ** (1.0 / q)


def _cell_interval_draws(grid, y, r, n_mc, rng):
    cell = grid.partition.locate(y)[0]
    i = grid.interval_index(r)
    zs = grid.partition.sample(rng, cells=np.full(n_mc, cell))
    us = (i + 1.0 - rng.random(n_mc)) / grid.m
    return zs, us


def smoothed_volume(grid, y, r, n_mc, rng):
    """Kernel average of the ball volume; 0 for ``r <= 0`` and 1 for ``r > 1``."""
    if r <= 0.0:
        return Estimate(0.0, 0.0, n_mc)
    if r > 1.0:
        return Estimate(1.0, 0.0, n_mc)
    zs, us = _cell_interval_draws(grid, y, r, n_mc, rng)
    return Estimate.from_samples(grid.space.ball_volume(us, zs))


def smoothed_indicator(grid, x, y, r, n_mc, rng):
    """Kernel average of the indicator of ``x`` in the ball."""
    if r <= 0.0:
        return Estimate(0.0, 0.0, n_mc)
    if r > 1.0:
        return Estimate(1.0, 0.0, n_mc)
    zs, us = _cell_interval_draws(grid, y, r, n_mc, rng)
    return Estimate.from_samples(grid.space.distance(x, zs) < us)


def smoothed_local_discrepancy(grid, D, y, r, n_mc, rng, return_sum_form=False):
    """Kernel average of the local discrepancy over the cell and interval of ``(y, r)``.

    With ``return_sum_form`` the same draws also give the sum of smoothed
    indicators minus ``N`` times the smoothed volume, returned second.
    """
    if r <= 0.0 or r > 1.0:
        zero = Estimate(0.0, 0.0, n_mc)
        return (zero, 0.0) if return_sum_form else zero
    zs, us = _cell_interval_draws(grid, y, r, n_mc, rng)
    values = local_discrepancies(grid.space, D, zs, us)
    est = Estimate.from_samples(values)
    if not return_sum_form:
        return est
    pts = D.points if hasattr(D, "points") else D
    chi = (grid.space.pairwise(zs, pts) < us[:, None]).mean(axis=0)
    vol = grid.space.ball_volume(us, zs).mean()
    return est, float(chi.sum() - len(pts) * vol)


def volume_increments(space, y, r, eps):
    """Volume gained by shrinking and by growing the radius by ``eps``."""
    if not eps > 0:
        raise InvalidArgumentError("eps must be positive")
    v = space.ball_volume(r, y)
    return float(v - space.ball_volume(r - eps, y)), float(space.ball_volume(r + eps, y) - v)


def boundary_cell_count(partition, y, r):
    """Number of (closed) cells meeting the metric sphere of radius ``r`` about ``y``."""
    near, far = partition.distance_range(y)
    return int(np.count_nonzero((near <= r) & (r <= far)))


@dataclass
class AprioriBoundReport:
    m: int
    p: float
    N: int
    lp_value: Estimate
    upper_bound: float
    upper_bound_se: float
    linf_lower: float
    constants_used: tuple

    @property
    def holds(self):
        return self.upper_bound + 4.0 * self.upper_bound_se >= self.linf_lower


def apriori_upper_bound(space, D, m, p, n_q, rng, constants, linf_cfg=None, linf_lower=None):
    """Evaluate the a priori bound and the L_inf lower estimate it must dominate.

    ``constants`` is ``(c2_hat, c8_hat)``.  Pass ``linf_lower`` to reuse an
    L_inf estimate of ``D`` across several ``(m, p)``.
    """
    if not p > 1:
        raise InvalidArgumentError("p must exceed 1")
    if m < 1:
        raise InvalidArgumentError("m must be at least 1")
    c2_hat, c8_hat = constants
    N = len(D.points)
    lp = lp_discrepancy(space, D, RadialMeasure.lebesgue(), p, n_q, rng)
    scale = 2.0 * m ** (2.0 / p)
    bound = scale * lp.mean + 4.0 * c2_hat * c8_hat * N * m ** (-1.0 / space.d)
    return AprioriBoundReport(
        m=m, p=p, N=N, lp_value=lp,
        upper_bound=bound, upper_bound_se=scale * lp.std_err,
        linf_lower=linf_estimate(space, D, linf_cfg) if linf_lower is None else float(linf_lower),
        constants_used=(c2_hat, c8_hat),
    )


def audited_c8(space, m):
    """Diameter constant of the partition of ``space`` into ``m`` cells."""
    return audit_partition(build_partition(space, m)).c8_hat


def sqrt_log_schedule(N, d):
    """Parameters ``(m, p) = (N**d, 2 d log2 N)`` giving the sqrt(log N) L_inf bound."""
    return N**d, 2.0 * d * math.log2(N)
