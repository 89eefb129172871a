import math

import numpy as np
import pytest

from mmdisc.conditions import (
    SPHERE_CURVATURE_THRESHOLD,
    bishop_gromov_check,
    bishop_gromov_ratio,
    default_r_grid,
    fit_condition_a,
    fit_condition_b,
    fit_conditions,
    intrinsic_cap_volume,
    model_volume,
    to_intrinsic_radius,
    to_normalized_radius,
)
from mmdisc.errors import InvalidArgumentError, UnsupportedSpaceError
from mmdisc.sampling import derive_rng
from mmdisc.space import Space

ALL = [Space.circle(), Space.sphere(2), Space.sphere(3), Space.sphere(6), Space.torus(2), Space.torus(4)]


def test_condition_a_torus():
    d_hat, c1 = fit_condition_a(Space.torus(2), 16)
    assert d_hat == pytest.approx(2.0, abs=1e-9)
    assert c1 == pytest.approx(1.0, abs=1e-9)


def test_condition_a_circle():
    d_hat, c1 = fit_condition_a(Space.circle(), 16)
    assert d_hat == pytest.approx(1.0, abs=1e-9)
    assert c1 == pytest.approx(1.0, abs=1e-9)


def test_condition_a_sphere2():
    d_hat, c1 = fit_condition_a(Space.sphere(2), 16)
    assert 1.8 <= d_hat <= 2.2
    assert 1.0 <= c1 <= math.pi**2 / 4 + 0.01


@pytest.mark.parametrize("space", ALL, ids=str)
def test_fitted_exponent_matches_dimension(space):
    d_hat, c1 = fit_condition_a(space, 8)
    assert abs(d_hat - space.d) <= 0.2
    assert c1 >= 1.0


@pytest.mark.parametrize("space", ALL, ids=str)
def test_c1_stable_under_grid_refinement(space):
    _, coarse = fit_condition_a(space, 8, default_r_grid(24))
    _, fine = fit_condition_a(space, 8, default_r_grid(47))
    assert fine == pytest.approx(coarse, rel=0.10)


@pytest.mark.parametrize(
    "space, expected",
    [(Space.circle(), 1.0), (Space.sphere(2), math.pi / 2), (Space.torus(2), 2.0), (Space.torus(3), 3.0)],
    ids=str,
)
def test_condition_b_examples(space, expected):
    assert fit_condition_b(space, 1000, derive_rng(0)) == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("space", ALL, ids=str)
def test_condition_b_stable_under_doubling(space):
    a = fit_condition_b(space, 1000, derive_rng(1))
    b = fit_condition_b(space, 2000, derive_rng(2))
    assert b == pytest.approx(a, rel=0.05)


def test_condition_b_dominates_sampled_slopes():
    S = Space.sphere(3)
    c2 = fit_condition_b(S, 1000, derive_rng(3))
    r = np.linspace(0, 1, 5001)
    v = S.ball_volume(r)
    assert np.max(np.diff(v) / np.diff(r)) <= c2 + 1e-9


def test_grid_validation():
    with pytest.raises(InvalidArgumentError):
        fit_condition_a(Space.circle(), 4, np.geomspace(0.01, 0.5, 5))
    with pytest.raises(InvalidArgumentError):
        fit_condition_a(Space.circle(), 4, np.linspace(0.01, 0.9, 10))
    with pytest.raises(InvalidArgumentError):
        fit_condition_a(Space.circle(), 4, np.geomspace(0.01, 1.5, 10))
    with pytest.raises(InvalidArgumentError):
        fit_condition_b(Space.circle(), 10)


def test_report_invariants():
    rep = fit_conditions(Space.sphere(2))
    assert rep.c1_hat >= 1 and rep.c2_hat >= 0 and rep.d_hat > 0
    assert len(rep.r_grid) == 24


@pytest.mark.parametrize(
    "d, k, r, expected",
    [
        (2, 0.0, 0.7, math.pi * 0.49),
        (3, 0.0, 1.0, 4 * math.pi / 3),
        (2, 1.0, 1.0, 2 * math.pi * (math.cosh(1.0) - 1)),
        (3, 1.0, 0.5, 4 * math.pi * (math.sinh(1.0) / 4 - 0.5 / 2)),
    ],
)
def test_model_volume_examples(d, k, r, expected):
    assert model_volume(d, k, r) == pytest.approx(expected, abs=1e-10)


def test_model_volume_continuous_at_zero_curvature():
    assert model_volume(3, 1e-6, 0.8) == pytest.approx(model_volume(3, 0.0, 0.8), rel=1e-9)


def test_model_volume_monotone_in_k():
    for d in (2, 3, 5):
        for r in np.linspace(0.1, 3.0, 10):
            vols = [model_volume(d, k, r) for k in np.linspace(0, 2, 9)]
            assert np.all(np.diff(vols) >= -1e-12)


def test_bishop_gromov_values():
    assert bishop_gromov_ratio(2, 0.0, math.pi / 2) == pytest.approx(8 / math.pi**2, abs=1e-9)
    assert bishop_gromov_ratio(2, 0.0, math.pi) == pytest.approx(4 / math.pi**2, abs=1e-9)
    assert bishop_gromov_ratio(2, 0.0, 0.01) == pytest.approx(1.0, abs=1e-5)


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("k", [0.0, 0.5, 1.0])
def test_bishop_gromov_non_increasing(d, k):
    grid = np.linspace(1e-3, math.pi, 1000)
    rep = bishop_gromov_check(Space.sphere(d), k, grid)
    assert rep.non_increasing
    assert rep.start_ratio == pytest.approx(1.0, abs=1e-3)


def test_bishop_gromov_errors():
    with pytest.raises(UnsupportedSpaceError):
        bishop_gromov_check(Space.torus(2), 0.0, [0.5, 1.0])
    with pytest.raises(InvalidArgumentError):
        bishop_gromov_check(Space.sphere(2), -1.0, [0.5, 1.0])
    assert SPHERE_CURVATURE_THRESHOLD == 0.0


def test_intrinsic_cap_matches_normalized_volume():
    for d in (2, 3, 4):
        S = Space.sphere(d)
        total = intrinsic_cap_volume(d, math.pi)
        for r in (0.1, 0.5, 0.9):
            assert intrinsic_cap_volume(d, to_intrinsic_radius(r)) / total == pytest.approx(S.ball_volume(r), abs=1e-10)
    assert to_normalized_radius(to_intrinsic_radius(0.37)) == pytest.approx(0.37)
