"""Point sets: jittered (one uniform point per partition cell), i.i.d. and lattice."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, UnsupportedSpaceError
from .space import Space


def derive_rng(seed, *keys):
    """Generator for the stream identified by ``(seed, *keys)``.

    Streams for different keys are statistically independent and do not depend
    on the order in which they are created, so trials can run on any worker.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.default_rng(ss)


@dataclass(frozen=True, eq=False)
class PointSet:
    """``N`` points of a space together with how they were produced.

    ``provenance`` is ``"jittered"``, ``"iid"`` or ``"lattice"``.
    """

    space: Space
    points: np.ndarray
    provenance: str
    seed: int | None = None
    partition: object = None

    def __len__(self):
        return len(self.points)

    @property
    def N(self):
        return len(self.points)


def jittered(partition, rng, seed=None):
    """One independent uniform point in every cell of ``partition``."""
    pts = partition.sample(rng)
    return PointSet(partition.space, pts, "jittered", seed=seed, partition=partition)


def iid(space, N, rng, seed=None):
    """``N`` independent points from the normalized measure."""
    if N < 1:
        raise InvalidArgumentError("N must be at least 1")
    return PointSet(space, space.sample(rng, N), "iid", seed=seed)


def fibonacci_sphere(N):
    """Fibonacci spiral on S^2 with equal-area latitude spacing."""
    k = np.arange(N)
    z = 1.0 - (2.0 * k + 1.0) / N
    phi = np.mod(k * np.pi * (3.0 - math.sqrt(5.0)), 2.0 * np.pi)
    s = np.sqrt(1.0 - z * z)
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


def lattice(space, N):
    """Deterministic baseline: equal spacing, a truncated grid, or a Fibonacci spiral."""
    if N < 1:
        raise InvalidArgumentError("N must be at least 1")
    if space.kind == "sphere":
        if space.d != 2:
            raise UnsupportedSpaceError(f"no lattice for {space}")
        pts = fibonacci_sphere(N)
    elif space.d == 1:
        pts = (np.arange(N) / N)[:, None]
    else:
        k = math.ceil(round(N ** (1.0 / space.d), 12))
        grids = np.meshgrid(*([np.arange(k) / k] * space.d), indexing="ij")
        pts = np.column_stack([g.ravel() for g in grids])[:N]
    return PointSet(space, pts, "lattice")


def write_pointset(pointset, path):
    """Write a point set as CSV with ``#`` header lines for space, provenance and seed.

    ``path`` may also be an open text stream.
    """
    if hasattr(path, "write"):
        _write_pointset(pointset, path)
        return
    with open(path, "w", newline="") as fh:
        _write_pointset(pointset, fh)


def _write_pointset(pointset, fh):
    fh.write(f"# space={pointset.space}\n")
    fh.write(f"# provenance={pointset.provenance}\n")
    fh.write(f"# seed={'' if pointset.seed is None else pointset.seed}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow([f"x{k}" for k in range(pointset.space.n_coords)])
    for row in pointset.points:
        writer.writerow([repr(float(v)) for v in row])


def read_pointset(path):
    meta = {}
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
        else:
            body.append(line)
    rows = list(csv.reader(body))[1:]
    space = Space.parse(meta["space"])
    points = np.array([[float(v) for v in row] for row in rows]).reshape(-1, space.n_coords)
    seed = int(meta["seed"]) if meta.get("seed") else None
    return PointSet(space, points, meta.get("provenance", "unknown"), seed=seed)
