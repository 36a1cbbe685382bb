import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from tiecop.copulas import CopulaSpec
from tiecop.copulas._bivariate import bvt_copula_cdf
from tiecop.errors import ConfigurationError, GridTooLargeError
from tiecop.identifiability import (
    IDENTIFIABLE,
    NOT_IDENTIFIABLE,
    RANK_DEFICIENT,
    build_grid,
    jacobian,
    numeric_rank,
    q_count,
    rank_scan,
)
from tiecop.margins import fit_empirical

RANK_POINTS = np.array([[0.5, 0.5], [0.75, 0.55]])


def _brute_count(m):
    # level j of a coordinate with m levels is j / m, the last one being 1
    levels = [[(k + 1) / mj for k in range(mj)] for mj in m]
    return sum(1 for pt in itertools.product(*levels) if sum(v < 1 for v in pt) >= 2)


@pytest.mark.parametrize("d", [2, 3])
def test_q_count_matches_enumeration(d):
    for m in itertools.product(range(1, 6), repeat=d):
        assert q_count(m) == _brute_count(m), m
        grid = build_grid([(np.arange(mj) + 1) / mj for mj in m])
        assert grid.q_n == q_count(m)


def test_bernoulli_grid():
    x = np.array([0, 0, 1, 1, 1])
    y = np.array([0, 1, 1, 0, 1])
    grid = build_grid([fit_empirical(x), fit_empirical(y)])
    assert grid.q_n == 1
    # identifiability grids use the unscaled empirical cdf count / n
    np.testing.assert_allclose(grid.points, [[2 / 5, 2 / 5]])
    rep = rank_scan("student", grid, [(0.1, 0.5), (2, 6)], 0.5)
    assert rep.verdict == NOT_IDENTIFIABLE
    assert rep.centers == ()
    rep = rank_scan("clayton", grid, [(0.5, 10.0)], 0.1)
    assert rep.verdict == IDENTIFIABLE
    assert all(c.rank == 1 for c in rep.centers)
    assert len(rep.centers) == 96


def test_grid_examples():
    assert build_grid([[1 / 3, 2 / 3, 1], [1 / 3, 2 / 3, 1]]).q_n == 4
    g = build_grid([[0.5, 1]] * 3)
    assert g.q_n == 4 and g.dim == 3
    assert np.all((g.points < 1).sum(axis=1) >= 2)


def test_grid_thinning_and_cap():
    rng = np.random.default_rng(0)
    cont = fit_empirical(rng.normal(size=500))
    g = build_grid([cont, cont])
    assert g.m == (25, 25) and g.capped == (0, 1)
    assert g.q_n == q_count(g.m)
    with pytest.raises(GridTooLargeError):
        build_grid([cont, cont], thin=[False, False], cap=10_000)
    with pytest.raises(ConfigurationError):
        build_grid([cont])


def test_gaussian_jacobian_at_center():
    for rho in (-0.5, 0.0, 0.3, 0.8):
        J = jacobian(CopulaSpec("gaussian", rho), np.array([[0.5, 0.5]]))
        assert J.shape == (1, 1)
        assert J[0, 0] == pytest.approx(1 / (2 * math.pi * math.sqrt(1 - rho**2)), rel=1e-6)


def test_student_rank_at_turning_point():
    # C(1/2, 1/2) does not depend on nu, so the Jacobian is singular where
    # nu -> C(0.75, 0.55) turns around between its two level crossings
    res = optimize.minimize_scalar(
        lambda nu: -bvt_copula_cdf(0.75, 0.55, 0.3, nu), bounds=(0.225, 0.799), method="bounded"
    )
    spec = CopulaSpec("student", (0.3, res.x), nu_grid=None)
    J = jacobian(spec, RANK_POINTS)
    assert J[0, 1] == pytest.approx(0.0, abs=1e-9)
    r, _ = numeric_rank(J, rank_tol=1e-4)
    assert r == 1
    r, _ = numeric_rank(jacobian(spec.with_theta((0.3, 2.0)), RANK_POINTS))
    assert r == 2
    rep = rank_scan("student", RANK_POINTS, [(0.25, 0.35), (0.3, 0.7)], 0.05)
    assert rep.verdict == RANK_DEFICIENT


def test_student_nu_level_crossings_bracketed():
    nus = np.arange(0.1, 1.2, 0.005)
    g = np.array([bvt_copula_cdf(0.75, 0.55, 0.3, nu) - 0.452 for nu in nus])
    flips = np.nonzero(np.sign(g[:-1]) != np.sign(g[1:]))[0]
    brackets = [(nus[i], nus[i + 1]) for i in flips]
    assert len(brackets) == 2
    for (lo, hi), target in zip(brackets, (0.224965, 0.79944)):
        assert lo <= target <= hi
        assert abs((lo + hi) / 2 - target) < 0.01


def test_rank_invariant_under_column_scaling():
    rng = np.random.default_rng(1)
    pts = rng.uniform(0.1, 0.9, size=(6, 2))
    J = jacobian(CopulaSpec("student", (0.4, 3.0), nu_grid=None), pts)
    r, _ = numeric_rank(J)
    for scale in ([10.0, 1.0], [1.0, 1e-3], [7.0, 0.2]):
        assert numeric_rank(J * np.asarray(scale))[0] == r


@settings(max_examples=15, deadline=None)
@given(st.permutations(list(range(4))), st.sampled_from(["clayton", "frank", "gaussian"]))
def test_verdict_invariant_to_point_order(perm, family):
    pts = build_grid([[1 / 3, 2 / 3, 1], [1 / 3, 2 / 3, 1]]).points
    box = {"clayton": [(0.5, 5)], "frank": [(0.5, 5)], "gaussian": [(-0.5, 0.5)]}[family]
    a = rank_scan(family, pts, box, 0.5)
    b = rank_scan(family, pts[list(perm)], box, 0.5)
    assert a.verdict == b.verdict
    assert [c.rank for c in a.centers] == [c.rank for c in b.centers]


def test_report_serialisation_and_errors():
    grid = build_grid([[0.5, 1], [0.5, 1]])
    rep = rank_scan("frank", grid, [(1.0, 3.0)], 1.0)
    d = rep.to_dict()
    assert d["verdict"] == IDENTIFIABLE and d["n_centers"] == 3 and d["q_n"] == 1
    with pytest.raises(ConfigurationError):
        rank_scan("frank", grid, [(1.0, 1.0)], 1.0)
    with pytest.raises(ConfigurationError):
        rank_scan("frank", grid, [(1.0, 3.0)], 0.0)
