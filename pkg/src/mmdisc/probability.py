"""Jittered point sets as random variables.

For a jittered set the local discrepancy splits into independent zero-mean
terms, one per cell crossing the sphere ``{x : theta(x, y) = r}``::

    zeta_j = chi(B(y, r), x_j) - N mu(B(y, r) & P_j)

Cells entirely inside or outside the ball contribute exactly zero, which is
also why only boundary cells are ever sampled here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discrepancy import Estimate, local_discrepancy, lp_power_samples
from .errors import InvalidArgumentError
from .sampling import derive_rng, jittered


@dataclass(frozen=True)
class CellClassification:
    inside: np.ndarray
    boundary: np.ndarray

    @property
    def n_inside(self):
        return len(self.inside)

    @property
    def n_boundary(self):
        return len(self.boundary)


def classify_cells(partition, y, r):
    """Split cells into those inside the open ball and those meeting its sphere.

    Uses exact minimum and maximum distances from ``y`` to each closed cell.
    Remaining cells lie outside the closed ball.
    """
    if r <= 0.0:
        empty = np.array([], dtype=int)
        return CellClassification(empty, empty)
    near, far = partition.distance_range(y)
    inside = np.flatnonzero(far < r)
    boundary = np.flatnonzero((near <= r) & (r <= far))
    return CellClassification(inside, boundary)


def _jitter_points(X):
    return X.points if hasattr(X, "points") else np.asarray(X)


def zeta(space, partition, X, j, y, r):
    """Centered contribution of cell ``j`` to the local discrepancy of ``X``."""
    if not 0 <= j < partition.m:
        raise InvalidArgumentError(f"cell index {j} out of range")
    x = _jitter_points(X)[j]
    overlap = partition.ball_overlap(y, r, cells=[j])[0]
    return float(space.indicator(y, r, x) - partition.m * overlap)


def zeta_terms(space, partition, X, y, r):
    """``(boundary cells, zeta values)`` for every boundary cell."""
    cls = classify_cells(partition, y, r)
    cells = cls.boundary
    if len(cells) == 0:
        return cells, np.zeros(0)
    x = _jitter_points(X)[cells]
    overlap = partition.ball_overlap(y, r, cells=cells)
    return cells, space.indicator(y, r, x) - partition.m * overlap


def discrepancy_decomposition_check(space, partition, X, y, r):
    """``|L(y, r) - sum of boundary zeta terms|``; zero up to rounding and quadrature."""
    _, terms = zeta_terms(space, partition, X, y, r)
    return abs(local_discrepancy(space, X, y, r) - float(terms.sum()))


def _child_rngs(rng, n):
    if isinstance(rng, np.random.Generator):
        return rng.spawn(n)
    return [derive_rng(rng, t) for t in range(n)]


def expectation(rv, trials, rng):
    """Mean and standard error of ``rv(generator)`` over independent trials.

    ``rng`` is either a master seed or a generator; trial ``t`` always gets the
    ``t``-th derived stream, so results do not depend on evaluation order.
    """
    if trials < 2:
        raise InvalidArgumentError("trials must be at least 2")
    values = np.array([float(rv(g)) for g in _child_rngs(rng, trials)])
    return Estimate.from_samples(values)


@dataclass
class MZReport:
    p: float
    n_boundary: int
    lhs: Estimate
    rhs: Estimate
    identity_gap: Estimate
    chain_bound: float

    @property
    def combined_se(self):
        return math.hypot(self.lhs.std_err, self.rhs.std_err)

    @property
    def holds(self):
        """Moment inequality up to three combined standard errors."""
        return self.lhs.mean <= self.rhs.mean + 3.0 * self.combined_se

    @property
    def identity_holds(self):
        """``E (sum zeta)^2 == E sum zeta^2`` within four standard errors."""
        return abs(self.identity_gap.mean) <= 4.0 * self.identity_gap.std_err + 1e-12


def mz_constant(p):
    return 2.0**p * (p + 1.0) ** (p / 2.0)


def mz_check(space, partition, y, r, p, trials, rng):
    """Estimate both sides of the moment inequality for the boundary zeta terms.

    ``lhs = E|sum zeta|^p`` and ``rhs = 2^p (p+1)^(p/2) E(sum zeta^2)^(p/2)``
    over ``trials`` independent jittered redraws of the boundary cells.
    ``chain_bound`` replaces ``sum zeta^2`` by its bound ``K`` (|zeta| < 1).
    """
    if p < 1:
        raise InvalidArgumentError("p must be at least 1")
    rng = derive_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    cells = classify_cells(partition, y, r).boundary
    K = len(cells)
    if K == 0:
        zero = Estimate(0.0, 0.0, trials)
        return MZReport(p, 0, zero, zero, zero, 0.0)
    prob = partition.m * partition.ball_overlap(y, r, cells=cells)
    x = partition.sample(rng, cells=cells, n=trials)
    z = space.indicator(y, r, x) - prob[None, :]
    s = z.sum(axis=1)
    q = (z * z).sum(axis=1)
    return MZReport(
        p=p,
        n_boundary=K,
        lhs=Estimate.from_samples(np.abs(s) ** p),
        rhs=Estimate.from_samples(mz_constant(p) * q ** (p / 2.0)),
        identity_gap=Estimate.from_samples(s * s - q),
        chain_bound=mz_constant(p) * K ** (p / 2.0),
    )


def expected_lp_trials(space, partition, xi, p, trials, n_q, seed):
    """Per-trial means of ``|L|^p`` over ``n_q`` random balls, one jittered set per trial."""
    out = np.empty(trials)
    for t in range(trials):
        X = jittered(partition, derive_rng(seed, t, 0), seed=seed)
        out[t] = lp_power_samples(space, X, xi, p, n_q, derive_rng(seed, t, 1)).mean()
    return out


def expected_lp(space, partition, xi, p, trials, n_q, seed):
    """``(E L_p^p)^(1/p)`` over jittered sets, estimated by the grand mean of ``|L|^p``."""
    if not p > 0:
        raise InvalidArgumentError("p must be positive")
    return Estimate.from_samples(expected_lp_trials(space, partition, xi, p, trials, n_q, seed)).root(p)
