"""Equal-measure partitions with small cells.

Every construction produces ``m`` cells of measure exactly ``1/m`` whose
diameters shrink like ``m**(-1/d)``:

* circle and tori: recursive slicing of the unit cube into boxes;
* the 2-sphere: a zonal equal-area construction made of two polar caps and
  collars of latitude-longitude patches.

Cells are half-open (lower-closed, upper-open in each slicing coordinate, seam
at azimuth 0) so the cover is an exact disjoint union.  Per-cell quantities are
kept in arrays on :class:`Partition`; :class:`Cell` objects are light views for
single-cell work.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import InvalidArgumentError, UnsupportedSpaceError
from .space import Space

TWO_PI = 2.0 * np.pi
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(40)


# -- cell shapes ----------------------------------------------------------------


@dataclass(frozen=True)
class Arc:
    start: float
    length: float


@dataclass(frozen=True)
class Box:
    lo: tuple
    width: tuple


@dataclass(frozen=True)
class ZonalPatch:
    z_lo: float
    z_hi: float
    phi_lo: float
    phi_hi: float


@dataclass(frozen=True)
class PolarCap:
    """Full-azimuth cap reaching a pole: ``z_hi == 1`` (north) or ``z_lo == -1`` (south)."""

    z_lo: float
    z_hi: float


Shape = Union[Arc, Box, ZonalPatch, PolarCap]


@dataclass(frozen=True)
class Cell:
    space: Space
    index: int
    shape: Shape
    anchor: np.ndarray = field(compare=False)


def _sphere_point(z, phi):
    z = np.asarray(z, dtype=float)
    s = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)


def _arc_overlap(a_lo, a_hi, b_lo, b_hi, period):
    """Length of the intersection of two arcs given as intervals on a circle.

    Each interval must be shorter than or equal to one period.
    """
    total = 0.0
    for shift in (-period, 0.0, period):
        total = total + np.maximum(
            0.0, np.minimum(a_hi, b_hi + shift) - np.maximum(a_lo, b_lo + shift)
        )
    return total


def _cap_azimuth_overlap(t, ty, py, a, p_lo, p_hi):
    """Azimuthal length at polar angle ``t`` shared by a cap and ``[p_lo, p_hi)``.

    The cap has center at polar angle ``ty``, azimuth ``py`` and angular
    radius ``a``.  Its half-width w satisfies cos w = q with
    1 - q and 1 + q written as sine products to avoid cancellation.
    """
    den = np.sin(t) * math.sin(ty)
    one_minus = 2.0 * np.sin(0.5 * (a + t - ty)) * np.sin(0.5 * (a - t + ty))
    one_plus = 2.0 * np.sin(0.5 * (t + ty + a)) * np.sin(0.5 * (t + ty - a))
    inside_all = one_plus <= 0.0
    empty = one_minus <= 0.0
    safe = np.where(den > 0.0, den, 1.0)
    w = 2.0 * np.arctan2(np.sqrt(np.clip(one_minus / safe, 0.0, None)),
                         np.sqrt(np.clip(one_plus / safe, 0.0, None)))
    width = p_hi - p_lo
    length = np.where(inside_all, width, np.where(empty, 0.0, _arc_overlap(py - w, py + w, p_lo, p_hi, TWO_PI)))
    # a pole-centred cap is a full band or nothing
    pole = den <= 0.0
    return np.where(pole, np.where(np.cos(t - ty) > math.cos(a), width, 0.0), length)


# -- construction ------------------------------------------------------------


def _split_counts(c, k):
    base, extra = divmod(c, k)
    return [base + 1 if i < extra else base for i in range(k)]


def _slice_boxes(lo, width, count, free, out):
    if count == 1 or not free:
        out.append((lo.copy(), width.copy()))
        return
    axis = max(free, key=lambda a: (width[a], -a))
    rest = [a for a in free if a != axis]
    k = count if not rest else math.ceil(round(count ** (1.0 / len(free)), 12))
    k = min(k, count)
    counts = _split_counts(count, k)
    start = lo[axis]
    span = width[axis]
    done = 0
    for c in counts:
        sub_lo = lo.copy()
        sub_w = width.copy()
        sub_lo[axis] = start + span * done / count
        sub_w[axis] = span * (done + c) / count - span * done / count
        done += c
        _slice_boxes(sub_lo, sub_w, c, rest, out)


def _largest_remainder(weights, total):
    weights = np.asarray(weights, dtype=float)
    ideal = weights / weights.sum() * total
    counts = np.floor(ideal).astype(int)
    short = total - counts.sum()
    order = np.argsort(-(ideal - counts), kind="stable")
    counts[order[:short]] += 1
    return counts


def sphere2_collars(m):
    """Cells per collar of the zonal construction, polar caps excluded."""
    if m <= 2:
        return []
    cap_angle = np.arccos(1.0 - 2.0 / m)
    n_collars = min(max(1, round(math.sqrt(m * math.pi) / 2.0)), m - 2)
    edges = cap_angle + (np.pi - 2 * cap_angle) * np.arange(n_collars + 1) / n_collars
    areas = np.cos(edges[:-1]) - np.cos(edges[1:])
    counts = _largest_remainder(areas, m - 2)
    return [int(c) for c in counts if c > 0]


@dataclass(frozen=True, eq=False)
class Partition:
    """An equal-measure partition of a space into ``m`` cells.

    For boxes ``lo`` and ``width`` have shape ``(m, d)``; for the sphere the
    arrays ``z_lo, z_hi, phi_lo, phi_hi`` have shape ``(m,)``.
    """

    space: Space
    m: int
    lo: np.ndarray = None
    width: np.ndarray = None
    z_lo: np.ndarray = None
    z_hi: np.ndarray = None
    phi_lo: np.ndarray = None
    phi_hi: np.ndarray = None
    z_edges: np.ndarray = None
    collar_counts: tuple = ()
    collar_offsets: tuple = ()

    @property
    def is_sphere(self):
        return self.space.kind == "sphere"

    def __len__(self):
        return self.m

    # -- per-cell views ---------------------------------------------------------

    def anchors(self):
        """Interior representative of each cell (the box or patch midpoint)."""
        if not self.is_sphere:
            return self.lo + 0.5 * self.width
        z = 0.5 * (self.z_lo + self.z_hi)
        z = np.where(self.z_hi >= 1.0, np.where(self.z_lo <= -1.0, 0.0, 1.0), z)
        z = np.where((self.z_lo <= -1.0) & (self.z_hi < 1.0), -1.0, z)
        return _sphere_point(z, 0.5 * (self.phi_lo + self.phi_hi))

    def shape(self, j):
        if not 0 <= j < self.m:
            raise InvalidArgumentError(f"cell index {j} out of range")
        if not self.is_sphere:
            if self.space.kind == "circle":
                return Arc(float(self.lo[j, 0]), float(self.width[j, 0]))
            return Box(tuple(self.lo[j]), tuple(self.width[j]))
        full = self.phi_hi[j] - self.phi_lo[j] >= TWO_PI
        if full and (self.z_hi[j] >= 1.0 or self.z_lo[j] <= -1.0):
            return PolarCap(float(self.z_lo[j]), float(self.z_hi[j]))
        return ZonalPatch(
            float(self.z_lo[j]), float(self.z_hi[j]), float(self.phi_lo[j]), float(self.phi_hi[j])
        )

    def cell(self, j):
        return Cell(self.space, j, self.shape(j), self.anchors()[j])

    @property
    def cells(self):
        anchors = self.anchors()
        return [Cell(self.space, j, self.shape(j), anchors[j]) for j in range(self.m)]

    # -- vectorized geometry ------------------------------------------------------

    def measures(self):
        if not self.is_sphere:
            return np.prod(self.width, axis=1)
        return (self.z_hi - self.z_lo) / 2.0 * (self.phi_hi - self.phi_lo) / TWO_PI

    def diameters(self):
        """Upper bounds on the cell diameters (exact for boxes and caps)."""
        if not self.is_sphere:
            return 2.0 * np.max(np.minimum(self.width, 0.5), axis=1)
        out = np.empty(self.m)
        anchors = self.anchors()
        for j in range(self.m):
            shape = self.shape(j)
            if isinstance(shape, PolarCap):
                if shape.z_hi >= 1.0:
                    radius = np.arccos(np.clip(shape.z_lo, -1.0, 1.0))
                else:
                    radius = np.arccos(np.clip(-shape.z_hi, -1.0, 1.0))
                out[j] = min(1.0, 2.0 * radius / np.pi)
            else:
                _, far = self._sphere_ranges(anchors[j], np.array([j]))
                out[j] = min(1.0, 2.0 * far[0])
        return out

    def locate(self, x):
        """Index of the cell containing each point."""
        x = np.atleast_2d(self.space.as_points(x))
        if not self.is_sphere:
            idx = np.zeros(len(x), dtype=int)
            # boxes come from a product-free recursive slicing; test membership directly
            inside = self._box_membership(x)
            hit = inside.argmax(axis=1)
            if not np.all(inside[np.arange(len(x)), hit]):
                raise InvalidArgumentError("point outside every cell")
            idx[:] = hit
            return idx
        z = np.clip(x[:, 2], -1.0, 1.0)
        phi = np.mod(np.arctan2(x[:, 1], x[:, 0]), TWO_PI)
        # z_edges is decreasing from 1 to -1; zone i covers [z_edges[i+1], z_edges[i])
        zone = np.searchsorted(-self.z_edges, -z, side="left") - 1
        zone = np.clip(zone, 0, len(self.collar_counts) - 1)
        counts = np.asarray(self.collar_counts)[zone]
        offsets = np.asarray(self.collar_offsets)[zone]
        k = np.minimum((phi * counts / TWO_PI).astype(int), counts - 1)
        return offsets + k

    def _box_membership(self, x):
        rel = np.mod(x[:, None, :] - self.lo[None, :, :], 1.0)
        return np.all(rel < self.width[None, :, :], axis=2)

    def contains(self, j, x):
        """Whether each point lies in cell ``j`` (half-open convention)."""
        x = np.atleast_2d(self.space.as_points(x))
        return self.locate(x) == j

    def sample(self, rng, cells=None, n=None):
        """Draw one uniform point in each listed cell (or ``n`` points in each)."""
        cells = np.arange(self.m) if cells is None else np.asarray(cells, dtype=int)
        shape = (len(cells),) if n is None else (n, len(cells))
        if not self.is_sphere:
            u = rng.random(shape + (self.space.d,))
            return np.mod(self.lo[cells] + u * self.width[cells], 1.0)
        u = rng.random(shape)
        w = rng.random(shape)
        z = self.z_lo[cells] + u * (self.z_hi[cells] - self.z_lo[cells])
        phi = self.phi_lo[cells] + w * (self.phi_hi[cells] - self.phi_lo[cells])
        return _sphere_point(z, phi)

    def distance_range(self, y):
        """Minimum and maximum normalized distance from ``y`` to each (closed) cell."""
        y = self.space.as_points(y)
        if not self.is_sphere:
            return self._box_ranges(y)
        return self._sphere_ranges(y, np.arange(self.m))

    def _box_ranges(self, y):
        lo = self.lo
        hi = self.lo + self.width
        rel = np.mod(y[None, :] - lo, 1.0)
        inside = rel <= self.width
        near = np.where(inside, 0.0, np.minimum(_circ_dist(y, lo), _circ_dist(y, hi)))
        anti = np.mod(y[None, :] + 0.5 - lo, 1.0) <= self.width
        far = np.where(anti, 0.5, np.maximum(_circ_dist(y, lo), _circ_dist(y, hi)))
        return 2.0 * near.max(axis=1), 2.0 * far.max(axis=1)

    def _sphere_ranges(self, y, cells):
        zy = float(np.clip(y[2], -1.0, 1.0))
        sy = float(np.hypot(y[0], y[1]))
        py = float(np.arctan2(y[1], y[0]))
        z_lo, z_hi = self.z_lo[cells], self.z_hi[cells]
        p_lo, p_hi = self.phi_lo[cells], self.phi_hi[cells]
        width = p_hi - p_lo

        def dot(z, phi):
            s = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
            return z * zy + s * sy * np.cos(phi - py)

        def in_phi(phi):
            return np.mod(phi - p_lo, TWO_PI) <= width + 1e-15

        values = [dot(z, p) for z in (z_lo, z_hi) for p in (p_lo, p_hi)]
        for target in (py, py + np.pi):
            ok = in_phi(target)
            for z in (z_lo, z_hi):
                values.append(np.where(ok, dot(z, target), np.nan))
        t_lo = np.arccos(np.clip(z_hi, -1.0, 1.0))
        t_hi = np.arccos(np.clip(z_lo, -1.0, 1.0))
        for p in (p_lo, p_hi):
            a = sy * np.cos(p - py)
            amp = np.hypot(a, zy)
            t_star = np.arctan2(a, zy)
            for t, sign in ((t_star, 1.0), (t_star + np.pi, -1.0), (t_star - np.pi, -1.0)):
                ok = (t >= t_lo) & (t <= t_hi)
                values.append(np.where(ok, sign * amp, np.nan))
        stack = np.vstack(values)
        hi_dot = np.nanmax(stack, axis=0)
        lo_dot = np.nanmin(stack, axis=0)
        pole_y = sy < 1e-15
        own = (z_lo <= zy) & (zy <= z_hi) & (in_phi(py) | pole_y | (width >= TWO_PI))
        anti = (z_lo <= -zy) & (-zy <= z_hi) & (in_phi(py + np.pi) | pole_y | (width >= TWO_PI))
        hi_dot = np.where(own, 1.0, hi_dot)
        lo_dot = np.where(anti, -1.0, lo_dot)
        near = np.arccos(np.clip(hi_dot, -1.0, 1.0)) / np.pi
        far = np.arccos(np.clip(lo_dot, -1.0, 1.0)) / np.pi
        return near, far

    def ball_overlap(self, y, r, cells=None):
        """Measure of ``B(y, r)`` intersected with each listed cell.

        Boxes are exact; sphere patches integrate the azimuthal overlap length
        piecewise by Gauss-Legendre, accurate to rounding.
        """
        y = self.space.as_points(y)
        cells = np.arange(self.m) if cells is None else np.asarray(cells, dtype=int)
        if r <= 0.0:
            return np.zeros(len(cells))
        if r >= 1.0:
            return self.measures()[cells]
        if not self.is_sphere:
            half = r / 2.0
            lengths = _arc_overlap(
                y[None, :] - half, y[None, :] + half,
                self.lo[cells], self.lo[cells] + self.width[cells], 1.0,
            )
            return np.prod(lengths, axis=1)
        return np.array([self._patch_overlap(y, r, j) for j in cells])

    def _patch_overlap(self, y, r, j):
        """Cap-patch intersection as an integral over the polar angle t.

        The azimuthal overlap is analytic between kinks (cap tangency with a
        latitude circle, cap boundary crossing a meridian edge); each piece
        is integrated by Gauss-Legendre after a cosine substitution that
        removes the square-root behaviour at tangencies.
        """
        ty = math.atan2(math.hypot(y[0], y[1]), y[2])
        py = math.atan2(y[1], y[0])
        a = math.pi * r
        p_lo, p_hi = float(self.phi_lo[j]), float(self.phi_hi[j])
        t_lo = math.acos(min(1.0, max(-1.0, float(self.z_hi[j]))))
        t_hi = math.acos(min(1.0, max(-1.0, float(self.z_lo[j]))))
        ts = [ty + a, ty - a, a - ty, 2.0 * math.pi - a - ty]
        if p_hi - p_lo < TWO_PI:
            sy, zy = math.sin(ty), math.cos(ty)
            c = math.cos(a)
            for p0 in (p_lo, p_hi):
                amp = math.hypot(sy * math.cos(p0 - py), zy)
                if amp > abs(c):
                    t_star = math.atan2(sy * math.cos(p0 - py), zy)
                    w = math.acos(c / amp)
                    ts += [t_star + sign * w + k * TWO_PI for sign in (-1, 1) for k in (-1, 0, 1)]
        knots = np.unique([t_lo, t_hi] + [t for t in ts if t_lo < t < t_hi])
        lo, hi = knots[:-1, None], knots[1:, None]
        # t = lo + (hi - lo) (1 - cos(pi s)) / 2 on s in [0, 1]
        s = 0.5 * (_GL_NODES + 1.0)
        t = lo + (hi - lo) * 0.5 * (1.0 - np.cos(np.pi * s))
        jac = (hi - lo) * 0.5 * np.pi * np.sin(np.pi * s) * 0.5 * _GL_WEIGHTS
        vals = _cap_azimuth_overlap(t, ty, py, a, p_lo, p_hi) * np.sin(t)
        return float((vals * jac).sum()) / (4.0 * math.pi)

    # -- output -------------------------------------------------------------------

    def to_csv(self, path):
        """Write one row per cell: shape parameters, measure and diameter bound."""
        measures = self.measures()
        diameters = self.diameters()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            if self.is_sphere:
                writer.writerow(["cell", "shape", "z_lo", "z_hi", "phi_lo", "phi_hi", "measure", "diameter"])
                for j in range(self.m):
                    kind = type(self.shape(j)).__name__
                    writer.writerow([j, kind, _num(self.z_lo[j]), _num(self.z_hi[j]),
                                     _num(self.phi_lo[j]), _num(self.phi_hi[j]),
                                     _num(measures[j]), _num(diameters[j])])
            else:
                d = self.space.d
                writer.writerow(["cell", "shape"] + [f"lo{k}" for k in range(d)]
                                + [f"width{k}" for k in range(d)] + ["measure", "diameter"])
                for j in range(self.m):
                    kind = type(self.shape(j)).__name__
                    writer.writerow([j, kind] + [_num(v) for v in self.lo[j]]
                                    + [_num(v) for v in self.width[j]]
                                    + [_num(measures[j]), _num(diameters[j])])


def _num(v):
    return repr(float(v))


def _circ_dist(y, edges):
    delta = np.abs(y[None, :] - edges) % 1.0
    return np.minimum(delta, 1.0 - delta)


def build_partition(space, m):
    """Build the equal-measure partition of ``space`` into ``m`` cells."""
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise InvalidArgumentError("m must be a positive integer")
    m = int(m)
    if space.kind in ("circle", "torus"):
        boxes = []
        _slice_boxes(np.zeros(space.d), np.ones(space.d), m, list(range(space.d)), boxes)
        lo = np.array([b[0] for b in boxes])
        width = np.array([b[1] for b in boxes])
        return Partition(space, m, lo=lo, width=width)
    if space.kind == "sphere" and space.d == 2:
        return _build_sphere2(space, m)
    raise UnsupportedSpaceError(f"no partition construction for {space}")


def _build_sphere2(space, m):
    if m == 1:
        counts = [1]
    elif m == 2:
        counts = [1, 1]
    else:
        counts = [1] + sphere2_collars(m) + [1]
    cumulative = np.concatenate([[0], np.cumsum(counts)])
    z_edges = 1.0 - 2.0 * cumulative / m
    z_edges[0], z_edges[-1] = 1.0, -1.0
    z_lo, z_hi, p_lo, p_hi = [], [], [], []
    for zone, n in enumerate(counts):
        for k in range(n):
            z_hi.append(z_edges[zone])
            z_lo.append(z_edges[zone + 1])
            p_lo.append(TWO_PI * k / n)
            p_hi.append(TWO_PI * (k + 1) / n)
    offsets = tuple(int(v) for v in cumulative[:-1])
    return Partition(
        space, m,
        z_lo=np.array(z_lo), z_hi=np.array(z_hi),
        phi_lo=np.array(p_lo), phi_hi=np.array(p_hi),
        z_edges=z_edges, collar_counts=tuple(counts), collar_offsets=offsets,
    )


# -- single-cell operations ----------------------------------------------------------


def cell_measure(cell):
    """Exact measure of a cell."""
    s = cell.shape
    if isinstance(s, Arc):
        return s.length
    if isinstance(s, Box):
        return float(np.prod(s.width))
    if isinstance(s, PolarCap):
        return (s.z_hi - s.z_lo) / 2.0
    return (s.z_hi - s.z_lo) / 2.0 * (s.phi_hi - s.phi_lo) / TWO_PI


def _single(cell):
    s = cell.shape
    space = cell.space
    if isinstance(s, Arc):
        return Partition(space, 1, lo=np.array([[s.start]]), width=np.array([[s.length]]))
    if isinstance(s, Box):
        return Partition(space, 1, lo=np.array([s.lo], dtype=float), width=np.array([s.width], dtype=float))
    if isinstance(s, PolarCap):
        p = (0.0, TWO_PI)
    else:
        p = (s.phi_lo, s.phi_hi)
    return Partition(
        space, 1, z_lo=np.array([s.z_lo]), z_hi=np.array([s.z_hi]),
        phi_lo=np.array([p[0]]), phi_hi=np.array([p[1]]),
        z_edges=np.array([s.z_hi, s.z_lo]), collar_counts=(1,), collar_offsets=(0,),
    )


def cell_diameter(cell):
    """Upper bound on the diameter of a cell (exact for arcs, boxes and caps)."""
    return float(_single(cell).diameters()[0])


def sample_cell(cell, rng, n=None):
    """Uniform point(s) from the normalized restriction of the measure to ``cell``."""
    pts = _single(cell).sample(rng, n=n)
    return pts[0] if n is None else pts[:, 0]


def cell_contains(cell, x):
    """Membership of points in a cell, using the half-open convention."""
    x = np.atleast_2d(cell.space.as_points(x))
    s = cell.shape
    if isinstance(s, (Arc, Box)):
        lo = np.atleast_1d(s.start if isinstance(s, Arc) else np.array(s.lo))
        width = np.atleast_1d(s.length if isinstance(s, Arc) else np.array(s.width))
        return np.all(np.mod(x - lo, 1.0) < width, axis=1)
    z = x[:, 2]
    top = z <= s.z_hi if s.z_hi >= 1.0 else z < s.z_hi
    ok = (z >= s.z_lo) & top
    if isinstance(s, ZonalPatch):
        phi = np.mod(np.arctan2(x[:, 1], x[:, 0]), TWO_PI)
        ok &= (phi >= s.phi_lo) & (phi < s.phi_hi)
    return ok


# -- audit ------------------------------------------------------------------------


@dataclass
class AuditReport:
    space: str
    m: int
    measure_sum: float
    max_measure_error: float
    c8_hat: float
    lower_constant: float
    n_pairs: int

    @property
    def measures_ok(self):
        return abs(self.measure_sum - 1.0) <= 1e-12 and self.max_measure_error <= 1e-12


def audit_partition(partition, n_pairs=64, rng=None):
    """Check equal measures and fit the diameter constants of a partition.

    ``c8_hat`` is the largest diameter bound times ``m**(1/d)``; the lower
    constant is the smallest sampled diameter (max distance among ``n_pairs``
    random pairs per cell) times ``m**(1/d)``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    m = partition.m
    space = partition.space
    scale = m ** (1.0 / space.d)
    measures = partition.measures()
    a = partition.sample(rng, n=n_pairs)
    b = partition.sample(rng, n=n_pairs)
    sampled = space.distance(a, b).max(axis=0)
    return AuditReport(
        space=str(space),
        m=m,
        measure_sum=float(measures.sum()),
        max_measure_error=float(np.max(np.abs(measures * m - 1.0)) / m),
        c8_hat=float(partition.diameters().max() * scale),
        lower_constant=float(sampled.min() * scale),
        n_pairs=n_pairs,
    )
