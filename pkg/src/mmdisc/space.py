"""Compact metric measure spaces normalized to unit measure and unit diameter.

Three families are implemented: the circle, the round spheres S^d and the flat
tori T^d.  Distances are scaled so that the diameter is exactly 1, and the
measure is the normalized Riemannian (Haar) measure, so every ball volume
``v(y, r)`` depends on the radius only.

Points are plain ``numpy`` arrays whose last axis holds the coordinates:

* ``Sphere(d)``: unit vectors in R^(d+1);
* ``Torus(d)``: d coordinates in [0, 1);
* ``Circle``: one coordinate in [0, 1) (the turn fraction).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import InvalidArgumentError

MAX_SPHERE_DIM = 10
MAX_TORUS_DIM = 6


def _circ(delta):
    """Circular distance in [0, 1/2] between coordinates in turn units."""
    delta = np.abs(np.asarray(delta, dtype=float)) % 1.0
    return np.minimum(delta, 1.0 - delta)


@dataclass(frozen=True)
class Space:
    """A normalized compact metric measure space.

    Use the constructors :meth:`circle`, :meth:`sphere` and :meth:`torus`.
    """

    kind: str
    d: int

    def __post_init__(self):
        if self.kind == "circle":
            if self.d != 1:
                raise InvalidArgumentError("the circle has dimension 1")
        elif self.kind == "sphere":
            if not 1 <= self.d <= MAX_SPHERE_DIM:
                raise InvalidArgumentError(f"sphere dimension must be in [1, {MAX_SPHERE_DIM}]")
        elif self.kind == "torus":
            if not 1 <= self.d <= MAX_TORUS_DIM:
                raise InvalidArgumentError(f"torus dimension must be in [1, {MAX_TORUS_DIM}]")
        else:
            raise InvalidArgumentError(f"unknown space kind {self.kind!r}")

    @classmethod
    def circle(cls):
        return cls("circle", 1)

    @classmethod
    def sphere(cls, d):
        return cls("sphere", int(d))

    @classmethod
    def torus(cls, d):
        return cls("torus", int(d))

    @classmethod
    def parse(cls, text):
        """Parse ``"circle"``, ``"sphere:d"`` or ``"torus:d"``."""
        text = text.strip().lower()
        if text == "circle":
            return cls.circle()
        name, _, dim = text.partition(":")
        if name in ("sphere", "torus") and dim.isdigit():
            return cls(name, int(dim))
        raise InvalidArgumentError(f"cannot parse space {text!r}")

    def __str__(self):
        return "circle" if self.kind == "circle" else f"{self.kind}:{self.d}"

    @property
    def dim(self):
        """Ahlfors exponent of the space."""
        return self.d

    @property
    def n_coords(self):
        """Length of the coordinate vector of a point."""
        return self.d + 1 if self.kind == "sphere" else self.d

    # -- points -------------------------------------------------------------

    def as_points(self, x):
        """Return ``x`` as a float array whose last axis has the coordinate length."""
        x = np.asarray(x, dtype=float)
        if self.kind == "circle" and x.ndim == 0:
            x = x[None]
        if x.ndim == 0 or x.shape[-1] != self.n_coords:
            raise InvalidArgumentError(
                f"points for {self} need {self.n_coords} coordinates, got shape {x.shape}"
            )
        return x

    def point(self, coords):
        """Validate a single point, enforcing the coordinate constraints."""
        x = self.as_points(coords)
        if x.ndim != 1:
            raise InvalidArgumentError("expected a single point")
        if self.kind == "sphere":
            if abs(np.linalg.norm(x) - 1.0) > 1e-12:
                raise InvalidArgumentError("sphere points must be unit vectors")
        elif np.any((x < 0.0) | (x >= 1.0)):
            raise InvalidArgumentError("torus coordinates must lie in [0, 1)")
        return x

    def sample(self, rng, n=None):
        """Draw ``n`` independent points from the normalized measure."""
        shape = (1 if n is None else n, self.n_coords)
        if self.kind == "sphere":
            g = rng.standard_normal(shape)
            x = g / np.linalg.norm(g, axis=-1, keepdims=True)
        else:
            x = rng.random(shape)
        return x[0] if n is None else x

    # -- metric ---------------------------------------------------------------

    def distance(self, x, y):
        """Normalized distance, broadcasting over leading axes."""
        x = self.as_points(x)
        y = self.as_points(y)
        if self.kind == "sphere":
            chord = np.linalg.norm(x - y, axis=-1)
            anti = np.linalg.norm(x + y, axis=-1)
            return 2.0 * np.arctan2(chord, anti) / np.pi
        return 2.0 * np.max(_circ(x - y), axis=-1)

    def pairwise(self, ys, xs):
        """Distance matrix of shape ``(len(ys), len(xs))``.

        Coordinates are processed one at a time so memory stays at a few
        ``(len(ys), len(xs))`` buffers.
        """
        ys = np.atleast_2d(self.as_points(ys))
        xs = np.atleast_2d(self.as_points(xs))
        if self.kind == "sphere":
            minus = np.zeros((len(ys), len(xs)))
            plus = np.zeros_like(minus)
            for k in range(self.n_coords):
                a = ys[:, k, None]
                b = xs[None, :, k]
                minus += (a - b) ** 2
                plus += (a + b) ** 2
            return 2.0 * np.arctan2(np.sqrt(minus), np.sqrt(plus)) / np.pi
        out = np.zeros((len(ys), len(xs)))
        for k in range(self.n_coords):
            np.maximum(out, _circ(ys[:, k, None] - xs[None, :, k]), out=out)
        return 2.0 * out

    def indicator(self, y, r, x):
        """Membership of ``x`` in the open ball ``B(y, r)`` as 0/1 integers."""
        return (self.distance(x, y) < r).astype(int)

    # -- volumes --------------------------------------------------------------

    def ball_volume(self, r, y=None):
        """Measure of ``B(y, r)``; independent of the center for every implemented space.

        Radii are clamped: ``v = 0`` for ``r <= 0`` and ``v = 1`` for ``r >= 1``.
        """
        if y is not None:
            self.as_points(y)
        r = np.clip(np.asarray(r, dtype=float), 0.0, 1.0)
        if self.kind == "torus" or self.kind == "circle":
            return r**self.d
        if self.d == 1:
            return r
        if self.d == 2:
            return 0.5 * (1.0 - np.cos(np.pi * r))
        return sphere_cap_fraction(self.d, np.pi * r)

    def ball_volume_derivative(self, r):
        """Derivative of the ball volume in the radius on [0, 1]."""
        r = np.clip(np.asarray(r, dtype=float), 0.0, 1.0)
        if self.kind != "sphere":
            return self.d * r ** (self.d - 1)
        norm = np.sqrt(np.pi) * special.gamma(self.d / 2) / special.gamma((self.d + 1) / 2)
        return np.pi * np.sin(np.pi * r) ** (self.d - 1) / norm


def sphere_cap_fraction(d, angle):
    """Normalized measure of a geodesic cap of angular radius ``angle`` on S^d.

    Equals int_0^angle sin^(d-1) t dt / int_0^pi sin^(d-1) t dt, written through
    the regularized incomplete beta function.
    """
    angle = np.clip(np.asarray(angle, dtype=float), 0.0, np.pi)
    half = 0.5 * special.betainc(d / 2.0, 0.5, np.sin(angle) ** 2)
    return np.where(angle <= np.pi / 2, half, 1.0 - half)


@dataclass(frozen=True)
class RadialMeasure:
    """A probability measure on the radius interval [0, 1].

    ``lebesgue`` is uniform, ``sincap`` has density (pi/2) sin(pi r) (caps of
    the sphere with uniformly distributed height), ``dirac`` is a point mass at ``r0``.
    """

    kind: str
    r0: float = 0.0

    def __post_init__(self):
        if self.kind not in ("lebesgue", "sincap", "dirac"):
            raise InvalidArgumentError(f"unknown radial measure {self.kind!r}")
        if self.kind == "dirac" and not 0.0 <= self.r0 <= 1.0:
            raise InvalidArgumentError("dirac location must lie in [0, 1]")

    @classmethod
    def lebesgue(cls):
        return cls("lebesgue")

    @classmethod
    def sincap(cls):
        return cls("sincap")

    @classmethod
    def dirac(cls, r0):
        return cls("dirac", float(r0))

    @classmethod
    def parse(cls, text):
        """Parse ``"lebesgue"``, ``"sincap"`` or ``"dirac:r0"``."""
        text = text.strip().lower()
        if text in ("lebesgue", "sincap"):
            return cls(text)
        name, _, value = text.partition(":")
        if name == "dirac":
            try:
                return cls.dirac(float(value))
            except ValueError:
                pass
        raise InvalidArgumentError(f"cannot parse radial measure {text!r}")

    def __str__(self):
        return f"dirac:{self.r0!r}" if self.kind == "dirac" else self.kind

    def cdf(self, r):
        r = np.clip(np.asarray(r, dtype=float), 0.0, 1.0)
        if self.kind == "lebesgue":
            return r
        if self.kind == "sincap":
            return 0.5 * (1.0 - np.cos(np.pi * r))
        return (r >= self.r0).astype(float)

    def ppf(self, u):
        """Inverse CDF."""
        u = np.asarray(u, dtype=float)
        if self.kind == "lebesgue":
            return u.copy()
        if self.kind == "sincap":
            return np.arccos(np.clip(1.0 - 2.0 * u, -1.0, 1.0)) / np.pi
        return np.full_like(u, self.r0)

    def sample(self, rng, n=None):
        u = rng.random(n)
        return float(self.ppf(u)) if n is None else self.ppf(u)
