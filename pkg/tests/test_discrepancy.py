import math

import numpy as np
import pytest
from oracles import circle_l2_by_quadrature, circle_linf_by_arcs

from mmdisc.discrepancy import (
    Estimate,
    LinfSearchConfig,
    ball_counts,
    circle_exact_l2,
    circle_exact_linf,
    linf_estimate,
    local_discrepancies,
    local_discrepancy,
    lp_discrepancy,
    lp_discrepancy_stratified,
    pointwise_term,
)
from mmdisc.errors import InvalidArgumentError, UnsupportedSpaceError
from mmdisc.partition import build_partition
from mmdisc.sampling import derive_rng, iid, jittered, lattice
from mmdisc.space import RadialMeasure, Space

CIRCLE, SPHERE, TORUS2 = Space.circle(), Space.sphere(2), Space.torus(2)
LEB = RadialMeasure.lebesgue()
QUARTERS = lattice(CIRCLE, 4)


def test_local_discrepancy_examples():
    assert local_discrepancy(CIRCLE, QUARTERS, [0.0], 0.6) == pytest.approx(0.6, abs=1e-12)
    assert local_discrepancy(CIRCLE, QUARTERS, [0.3], 1.0) == 0.0
    assert local_discrepancy(CIRCLE, QUARTERS, [0.3], 1.5) == 0.0
    assert local_discrepancy(CIRCLE, QUARTERS, [0.3], 0.0) == 0.0
    assert local_discrepancy(CIRCLE, QUARTERS, [0.3], -0.2) == 0.0


def test_pointwise_term_examples():
    assert pointwise_term(CIRCLE, np.array([0.3]), 0.5, np.array([0.3])) == pytest.approx(0.5)
    assert pointwise_term(CIRCLE, np.array([0.0]), 0.6, np.array([0.25])) == pytest.approx(0.4)


def test_pointwise_term_averages_to_zero():
    rng = derive_rng(0)
    y = SPHERE.sample(rng)
    x = SPHERE.sample(rng, 10_000)
    vals = pointwise_term(SPHERE, y, 0.42, x)
    assert abs(vals.mean()) <= 4 * vals.std(ddof=1) / math.sqrt(len(vals))


@pytest.mark.parametrize("space", [CIRCLE, SPHERE, TORUS2, Space.sphere(4)], ids=str)
def test_additivity_and_range(space):
    rng = derive_rng(1)
    for _ in range(1000 // 10):
        D = iid(space, int(rng.integers(1, 40)), rng)
        ys = space.sample(rng, 10)
        rs = rng.uniform(-0.1, 1.1, 10)
        L = local_discrepancies(space, D, ys, rs)
        for y, r, value in zip(ys, rs, L):
            assert value == pytest.approx(pointwise_term(space, y, r, D.points).sum(), abs=1e-9)
            assert abs(value) <= D.N


def test_sphere_counts_match_exact_distances_for_small_radii():
    rng = derive_rng(2)
    pts = SPHERE.sample(rng, 300)
    ys = pts[:50] + 1e-7 * rng.standard_normal((50, 3))
    ys /= np.linalg.norm(ys, axis=1, keepdims=True)
    for r in (1e-8, 5e-8, 1e-6, 1e-3, 0.3):
        expected = (SPHERE.pairwise(ys, pts) < r).sum(axis=1)
        assert np.array_equal(ball_counts(SPHERE, pts, ys, np.full(50, r)), expected)


@pytest.mark.parametrize("N", [1, 2, 7, 100, 1000])
def test_circle_counts_match_pairwise_distances(N):
    rng = derive_rng(2, N)
    x, ys, rs = CIRCLE.sample(rng, N), CIRCLE.sample(rng, 2000), rng.uniform(-0.1, 1.1, 2000)
    expected = np.where(rs > 0, (CIRCLE.pairwise(ys, x) < rs[:, None]).sum(axis=1), 0)
    assert np.array_equal(ball_counts(CIRCLE, x, ys, rs), expected)


@pytest.mark.parametrize("r", [0.25, 0.5, 0.75, 1.0])
def test_circle_counts_on_lattice_ties(r):
    x = lattice(CIRCLE, 8).points
    ys = np.array([[0.0], [0.125], [0.0625], [0.5]])
    assert np.array_equal(ball_counts(CIRCLE, x, ys, np.full(4, r)), (CIRCLE.pairwise(ys, x) < r).sum(axis=1))


def test_lp_single_point_circle():
    D = lattice(CIRCLE, 1)
    est = lp_discrepancy(CIRCLE, D, LEB, 2, 200_000, derive_rng(3))
    assert abs(est.mean - math.sqrt(1 / 6)) <= 4 * est.std_err


def test_lp_dirac_zero():
    D = iid(SPHERE, 10, derive_rng(4))
    assert lp_discrepancy(SPHERE, D, RadialMeasure.dirac(0.0), 2, 100, derive_rng(5)).mean == 0.0


def test_lp_lattice_matches_exact():
    est = lp_discrepancy(CIRCLE, QUARTERS, LEB, 2, 200_000, derive_rng(6))
    assert abs(est.mean - circle_exact_l2(QUARTERS)) <= 4 * est.std_err


def test_lp_is_deterministic_given_seed():
    D = iid(TORUS2, 16, derive_rng(0))
    a = lp_discrepancy(TORUS2, D, LEB, 3, 1000, derive_rng(9))
    b = lp_discrepancy(TORUS2, D, LEB, 3, 1000, derive_rng(9))
    assert a == b


def test_lp_monotone_in_p():
    D = jittered(build_partition(SPHERE, 128), derive_rng(7))
    ests = [lp_discrepancy(SPHERE, D, RadialMeasure.sincap(), p, 40_000, derive_rng(8)) for p in (1, 2, 4)]
    for a, b in zip(ests, ests[1:]):
        assert a.mean <= b.mean + 3 * math.hypot(a.std_err, b.std_err)


def test_lp_rejects_bad_p():
    with pytest.raises(InvalidArgumentError):
        lp_discrepancy(CIRCLE, QUARTERS, LEB, 0, 10, derive_rng(0))
    with pytest.raises(InvalidArgumentError):
        lp_discrepancy(CIRCLE, QUARTERS, LEB, 2, 1, derive_rng(0))


def test_stratified_agrees_with_monte_carlo():
    D = jittered(build_partition(SPHERE, 64), derive_rng(10))
    mc = lp_discrepancy(SPHERE, D, RadialMeasure.sincap(), 2, 100_000, derive_rng(11))
    st = lp_discrepancy_stratified(SPHERE, D, RadialMeasure.sincap(), 2, build_partition(SPHERE, 1024), 64)
    assert st.mean == pytest.approx(mc.mean, rel=0.05)


def test_estimate_root_delta_method():
    e = Estimate(4.0, 0.4, 100)
    r = e.root(2)
    assert r.mean == 2.0
    assert r.std_err == pytest.approx(0.5 * 4.0 ** (-0.5) * 0.4)
    assert Estimate.from_samples([1.0, 1.0, 1.0]).std_err == 0.0


# -- exact circle oracles ----------------------------------------------------------


@pytest.mark.parametrize("N", [1, 2, 3, 5, 8])
def test_circle_exact_l2_matches_quadrature(N):
    t = iid(CIRCLE, N, derive_rng(20, N)).points
    assert circle_exact_l2(t) == pytest.approx(circle_l2_by_quadrature(t[:, 0]), rel=1e-4)


def test_circle_exact_l2_single_point():
    assert circle_exact_l2(lattice(CIRCLE, 1)) == pytest.approx(math.sqrt(1 / 6), abs=1e-12)


def test_circle_exact_l2_rotation_invariant():
    t = iid(CIRCLE, 30, derive_rng(21)).points
    assert circle_exact_l2(np.mod(t + 0.3141, 1.0)) == pytest.approx(circle_exact_l2(t), abs=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_circle_exact_l2_agrees_with_monte_carlo(seed):
    D = jittered(build_partition(CIRCLE, 32), derive_rng(22, seed))
    est = lp_discrepancy(CIRCLE, D, LEB, 2, 50_000, derive_rng(23, seed))
    assert abs(est.mean - circle_exact_l2(D)) <= 4 * est.std_err


@pytest.mark.parametrize("N", [1, 2, 3, 4, 7, 12])
def test_circle_exact_linf_matches_arc_enumeration(N):
    for seed in range(3):
        t = iid(CIRCLE, N, derive_rng(24, N, seed)).points[:, 0]
        assert circle_exact_linf(t[:, None]) == pytest.approx(circle_linf_by_arcs(t), abs=1e-9)


@pytest.mark.parametrize("N", [1, 2, 3, 17, 64])
def test_circle_lattice_linf_is_one(N):
    assert circle_exact_linf(lattice(CIRCLE, N)) == pytest.approx(1.0, abs=1e-12)


def test_exact_oracles_reject_other_spaces():
    with pytest.raises(UnsupportedSpaceError):
        circle_exact_l2(iid(SPHERE, 3, derive_rng(0)))
    with pytest.raises(UnsupportedSpaceError):
        circle_exact_linf(iid(TORUS2, 3, derive_rng(0)))


# -- L_inf search ----------------------------------------------------------------


@pytest.mark.parametrize("space", [CIRCLE, SPHERE, TORUS2], ids=str)
def test_linf_single_point(space):
    D = iid(space, 1, derive_rng(30))
    value = linf_estimate(space, D, LinfSearchConfig(n_centers=64))
    assert 1.0 - 1e-6 <= value <= 1.0


def test_linf_circle_lattice():
    assert 1.0 - 1e-3 <= linf_estimate(CIRCLE, QUARTERS) <= 1.0


@pytest.mark.parametrize("space", [CIRCLE, SPHERE, TORUS2], ids=str)
def test_linf_monotone_under_refinement(space):
    D = iid(space, 40, derive_rng(31))
    coarse = linf_estimate(space, D, LinfSearchConfig(n_centers=50, n_radius_grid=16))
    fine = linf_estimate(space, D, LinfSearchConfig(n_centers=100, n_radius_grid=32))
    assert fine >= coarse


@pytest.mark.parametrize("N", [8, 64, 256])
def test_linf_search_close_to_exact_on_circle(N):
    for seed in range(3):
        D = jittered(build_partition(CIRCLE, N), derive_rng(32, N, seed))
        exact = circle_exact_linf(D)
        est = linf_estimate(CIRCLE, D)
        assert est <= exact + 1e-9
        assert exact - est <= 0.05


def test_linf_config_validation():
    with pytest.raises(InvalidArgumentError):
        LinfSearchConfig(radius_jog=1e-3)
    with pytest.raises(InvalidArgumentError):
        LinfSearchConfig(n_centers=0)
