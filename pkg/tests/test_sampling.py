import math

import numpy as np
import pytest

from mmdisc.discrepancy import local_discrepancy
from mmdisc.errors import InvalidArgumentError, UnsupportedSpaceError
from mmdisc.partition import build_partition
from mmdisc.sampling import derive_rng, fibonacci_sphere, iid, jittered, lattice, read_pointset, write_pointset
from mmdisc.space import Space

CIRCLE, SPHERE, TORUS2 = Space.circle(), Space.sphere(2), Space.torus(2)


@pytest.mark.parametrize("space, m", [(CIRCLE, 4), (CIRCLE, 37), (TORUS2, 50), (SPHERE, 100)], ids=str)
def test_jittered_one_point_per_cell(space, m):
    P = build_partition(space, m)
    X = jittered(P, derive_rng(3, 0))
    assert X.provenance == "jittered" and X.partition is P
    assert np.array_equal(P.locate(X.points), np.arange(m))
    assert np.array_equal(np.bincount(P.locate(X.points), minlength=m), np.ones(m, dtype=int))


def test_circle_quarter_arcs():
    X = jittered(build_partition(CIRCLE, 4), derive_rng(0))
    assert np.all(np.floor(X.points[:, 0] * 4) == np.arange(4))


def test_jittered_deterministic():
    P = build_partition(SPHERE, 64)
    a = jittered(P, derive_rng(11, 2)).points
    b = jittered(P, derive_rng(11, 2)).points
    c = jittered(P, derive_rng(11, 3)).points
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_derived_streams_independent_of_order():
    first = [derive_rng(5, t).random() for t in range(4)]
    reverse = [derive_rng(5, t).random() for t in reversed(range(4))]
    assert first == reverse[::-1]


def test_jittered_local_discrepancy_has_zero_mean():
    P = build_partition(SPHERE, 32)
    y, r = np.array([0.0, 0.6, 0.8]), 0.37
    vals = np.array([local_discrepancy(SPHERE, jittered(P, derive_rng(1, t)), y, r) for t in range(10_000)])
    assert abs(vals.mean()) <= 4 * vals.std(ddof=1) / math.sqrt(len(vals))


@pytest.mark.parametrize(
    "f, integral",
    [
        (lambda x: x[..., 2], 0.0),
        (lambda x: x[..., 2] ** 2, 1 / 3),
        (lambda x: x[..., 0] ** 2 * x[..., 1] ** 2, 1 / 15),
        (lambda x: np.exp(x[..., 2]), math.sinh(1.0)),
        (lambda x: (x[..., 0] > 0).astype(float), 0.5),
    ],
)
def test_jittered_first_moment(f, integral):
    P = build_partition(SPHERE, 16)
    vals = np.array([f(jittered(P, derive_rng(9, t)).points).mean() for t in range(4000)])
    se = vals.std(ddof=1) / math.sqrt(len(vals))
    assert abs(vals.mean() - integral) <= 4 * se + 1e-12


def test_iid_binomial_counts():
    y, r, N = np.array([0.0, 0.0, 1.0]), 0.4, 20
    v = SPHERE.ball_volume(r)
    counts = np.array([SPHERE.indicator(y, r, iid(SPHERE, N, derive_rng(2, t)).points).sum() for t in range(10_000)])
    assert counts.var(ddof=1) == pytest.approx(N * v * (1 - v), rel=0.05)


def test_iid_single_point_is_one_draw():
    assert np.array_equal(iid(SPHERE, 1, derive_rng(4)).points[0], SPHERE.sample(derive_rng(4), 1)[0])


def test_iid_deterministic():
    assert np.array_equal(iid(TORUS2, 10, derive_rng(8)).points, iid(TORUS2, 10, derive_rng(8)).points)


@pytest.mark.parametrize("space, N, expected", [(CIRCLE, 4, [0, 0.25, 0.5, 0.75]), (Space.torus(1), 8, np.arange(8) / 8)])
def test_lattice_equal_spacing(space, N, expected):
    np.testing.assert_allclose(lattice(space, N).points[:, 0], expected)


def test_torus_lattice_truncated_grid():
    L = lattice(TORUS2, 10)
    assert L.N == 10
    assert np.all(np.isin(np.round(L.points * 4, 12), np.arange(4)))


def test_fibonacci_unit_vectors():
    pts = fibonacci_sphere(500)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)
    assert abs(pts[:, 2].mean()) < 1e-12


def test_lattice_errors():
    with pytest.raises(UnsupportedSpaceError):
        lattice(Space.sphere(3), 10)
    with pytest.raises(InvalidArgumentError):
        lattice(CIRCLE, 0)
    with pytest.raises(InvalidArgumentError):
        iid(CIRCLE, 0, derive_rng(0))


@pytest.mark.parametrize("space", [CIRCLE, SPHERE, TORUS2], ids=str)
def test_pointset_csv_roundtrip(space, tmp_path):
    X = iid(space, 17, derive_rng(6), seed=6)
    path = tmp_path / "x.csv"
    write_pointset(X, path)
    Y = read_pointset(path)
    assert Y.space == space and Y.provenance == "iid" and Y.seed == 6
    assert np.array_equal(X.points, Y.points)
