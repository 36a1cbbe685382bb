import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from helpers import ALL_SPECS, graded_rule, spec_id
from tiecop import copulas as cop
from tiecop.copulas import CopulaSpec, Family
from tiecop.copulas._bivariate import _bvt_quad_scalar, bvn_cdf, bvt_copula_cdf
from tiecop.errors import DomainError, InvalidParameterError, RangeError, StepSizeError, UnsupportedError

unit = st.floats(0.001, 0.999)


def clayton_cdf(u, v, th):
    return (u**-th + v**-th - 1.0) ** (-1.0 / th)


def clayton_density(u, v, th):
    return (1 + th) * (u * v) ** (-1 - th) * (u**-th + v**-th - 1) ** (-1 / th - 2)


# ---------------------------------------------------------------------------
# closed forms and independent oracles


def test_clayton_closed_forms():
    s = CopulaSpec("clayton", 2.0)
    assert cop.cdf(s, [0.5, 0.5]) == pytest.approx(7 ** -0.5, rel=1e-14)
    # 3 * 64 * 7^(-5/2)
    assert cop.density(s, [0.5, 0.5]) == pytest.approx(3 * 64 * 7**-2.5, rel=1e-13)
    assert cop.density(s, [0.5, 0.5]) == pytest.approx(1.4810, abs=1e-4)
    rng = np.random.default_rng(0)
    u = rng.uniform(0.01, 0.99, size=(50, 2))
    for th in (0.3, 2.0, 15.0):
        s = CopulaSpec("clayton", th)
        np.testing.assert_allclose(cop.cdf(s, u), clayton_cdf(u[:, 0], u[:, 1], th), rtol=1e-12)
        np.testing.assert_allclose(cop.density(s, u), clayton_density(u[:, 0], u[:, 1], th), rtol=1e-11)


def test_clayton_density_matches_finite_difference_of_cdf():
    s = CopulaSpec("clayton", 2.0)
    h = 1e-4
    c = lambda a, b: cop.cdf(s, [a, b])
    fd = (c(0.5 + h, 0.5 + h) - c(0.5 + h, 0.5 - h) - c(0.5 - h, 0.5 + h) + c(0.5 - h, 0.5 - h)) / (4 * h * h)
    assert fd == pytest.approx(cop.density(s, [0.5, 0.5]), rel=1e-6)


def test_bvn_against_scipy():
    rng = np.random.default_rng(1)
    for rho in (-0.95, -0.4, 0.0, 0.5, 0.93, 0.999):
        x = rng.normal(size=(20, 2)) * 1.5
        got = bvn_cdf(x[:, 0], x[:, 1], rho)
        cov = [[1, rho], [rho, 1]]
        ref = np.array([stats.multivariate_normal.cdf(p, [0, 0], cov, abseps=1e-12, releps=1e-12) for p in x])
        np.testing.assert_allclose(got, ref, atol=1e-8)


def test_bvn_conditional_quadrature_oracle():
    # Phi2(h, k; rho) = int_{-inf}^h phi(t) Phi((k - rho t)/sqrt(1-rho^2)) dt
    for h, k, rho in [(0.3, -0.2, 0.6), (-1.0, 2.0, -0.8), (1.5, 1.5, 0.97)]:
        s = math.sqrt(1 - rho * rho)
        ref, _ = integrate.quad(lambda t: stats.norm.pdf(t) * stats.norm.cdf((k - rho * t) / s), -np.inf, h, epsabs=1e-14)
        assert bvn_cdf(np.array([h]), np.array([k]), rho)[0] == pytest.approx(ref, abs=1e-12)


def test_bvn_infinite_limits():
    assert bvn_cdf(np.array([np.inf]), np.array([0.3]), 0.5)[0] == pytest.approx(stats.norm.cdf(0.3), abs=1e-15)
    assert bvn_cdf(np.array([-np.inf]), np.array([0.3]), 0.5)[0] == 0.0


@pytest.mark.parametrize("nu", [1, 2, 3, 5, 10, 30])
def test_student_integer_series_matches_quadrature(nu):
    rng = np.random.default_rng(nu)
    u = rng.uniform(0.02, 0.98, size=(8, 2))
    for rho in (-0.7, 0.3, 0.9):
        got = bvt_copula_cdf(u[:, 0], u[:, 1], rho, nu)
        ref = [_bvt_quad_scalar(a, b, rho, nu) for a, b in u]
        np.testing.assert_allclose(got, ref, atol=1e-10)


def test_student_rank_points():
    # C_{0.3, nu}(0.75, 0.55) = 0.452 at two values of nu
    for nu in (0.224965, 0.79944):
        assert bvt_copula_cdf(0.75, 0.55, 0.3, nu) == pytest.approx(0.452, abs=1e-6)
    assert bvt_copula_cdf(0.75, 0.55, 0.3, 0.5) > 0.452


def test_gaussian_median_value():
    rho = 0.3
    s = CopulaSpec("gaussian", rho)
    assert cop.cdf(s, [0.5, 0.5]) == pytest.approx(0.25 + math.asin(rho) / (2 * math.pi), abs=1e-14)


# ---------------------------------------------------------------------------
# structural properties, every family at three parameters


@pytest.mark.parametrize("spec", ALL_SPECS, ids=spec_id)
def test_uniform_margins_and_groundedness(spec):
    u = np.linspace(0.0, 1.0, 11)
    ones = np.ones_like(u)
    zeros = np.zeros_like(u)
    np.testing.assert_allclose(cop.cdf(spec, np.column_stack([u, ones])), u, atol=1e-12)
    np.testing.assert_allclose(cop.cdf(spec, np.column_stack([ones, u])), u, atol=1e-12)
    np.testing.assert_allclose(cop.cdf(spec, np.column_stack([u, zeros])), 0.0, atol=1e-14)
    np.testing.assert_allclose(cop.cdf(spec, np.column_stack([zeros, u])), 0.0, atol=1e-14)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=spec_id)
@settings(max_examples=40, deadline=None)
@given(u=unit, v=unit)
def test_frechet_bounds(spec, u, v):
    c = cop.cdf(spec, [u, v])
    assert max(u + v - 1.0, 0.0) - 1e-12 <= c <= min(u, v) + 1e-12


@pytest.mark.parametrize("spec", ALL_SPECS, ids=spec_id)
@settings(max_examples=40, deadline=None)
@given(a=unit, b=unit, c=unit, d=unit)
def test_two_increasing(spec, a, b, c, d):
    u1, u2 = sorted((a, b))
    v1, v2 = sorted((c, d))
    pts = np.array([[u2, v2], [u1, v2], [u2, v1], [u1, v1]])
    vals = cop.cdf(spec, pts)
    assert vals[0] - vals[1] - vals[2] + vals[3] >= -1e-12


@pytest.mark.parametrize("spec", ALL_SPECS, ids=spec_id)
def test_density_integrates_to_one(spec):
    x, w = graded_rule(40)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    dens = cop.density(spec, np.column_stack([xx.ravel(), yy.ravel()]))
    assert np.sum(np.outer(w, w).ravel() * dens) == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=spec_id)
def test_partials_match_finite_differences(spec):
    rng = np.random.default_rng(7)
    pts = rng.uniform(0.1, 0.9, size=(10, 2))
    h = 1e-5
    for j in (0, 1):
        e = np.zeros(2)
        e[j] = h
        fd = (cop.cdf(spec, pts + e) - cop.cdf(spec, pts - e)) / (2 * h)
        np.testing.assert_allclose(cop.partial_cdf(spec, pts, (j,)), fd, rtol=1e-6, atol=1e-9)
    # density against the derivative of the first partial
    fd = (cop.partial_cdf(spec, pts + [0, h], (0,)) - cop.partial_cdf(spec, pts - [0, h], (0,))) / (2 * h)
    np.testing.assert_allclose(cop.density(spec, pts), fd, rtol=1e-6, atol=1e-9)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=spec_id)
def test_tau_round_trip(spec):
    t = cop.tau(spec)
    aux = spec.theta[1] if spec.family is Family.STUDENT else None
    back = cop.tau_inverse(spec.family, t, aux)
    assert back[0] == pytest.approx(spec.theta[0], rel=1e-8, abs=1e-10)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=spec_id)
def test_tau_matches_integral_formula(spec):
    # tau = 1 - 4 int int dC/du dC/dv, independent of the family-specific closed forms
    x, w = graded_rule(30)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    integrand = cop.partial_cdf(spec, pts, (0,)) * cop.partial_cdf(spec, pts, (1,))
    assert 1 - 4 * np.sum(np.outer(w, w).ravel() * integrand) == pytest.approx(cop.tau(spec), abs=1e-6)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=spec_id)
def test_sampler_reproduces_tau(spec):
    u = cop.sample(spec, 20000, seed=11)
    assert u.shape == (20000, 2)
    assert np.all((u > 0) & (u < 1))
    np.testing.assert_allclose(u.mean(axis=0), 0.5, atol=0.01)
    t = stats.kendalltau(u[:, 0], u[:, 1]).statistic
    assert t == pytest.approx(cop.tau(spec), abs=0.015)


def test_sampler_seeded_determinism():
    s = CopulaSpec("gumbel", 2.0)
    np.testing.assert_array_equal(cop.sample(s, 100, 3), cop.sample(s, 100, 3))
    rng = np.random.default_rng(np.random.SeedSequence(3))
    assert cop.sample(s, 10, rng).shape == (10, 2)


# ---------------------------------------------------------------------------
# higher dimensions


@pytest.mark.parametrize("family,theta", [("clayton", 1.5), ("frank", 4.0), ("gumbel", 1.8)])
def test_archimedean_trivariate(family, theta):
    s = CopulaSpec(family, theta, dim=3)
    rng = np.random.default_rng(2)
    pts = rng.uniform(0.15, 0.85, size=(6, 3))
    h = 1e-4
    # mixed partial d_{0,1} C against a difference quotient of d_0 C
    fd = (cop.partial_cdf(s, pts + [0, h, 0], (0,)) - cop.partial_cdf(s, pts - [0, h, 0], (0,))) / (2 * h)
    np.testing.assert_allclose(cop.partial_cdf(s, pts, (0, 1)), fd, rtol=1e-6)
    fd3 = (cop.partial_cdf(s, pts + [0, 0, h], (0, 1)) - cop.partial_cdf(s, pts - [0, 0, h], (0, 1))) / (2 * h)
    np.testing.assert_allclose(cop.density(s, pts), fd3, rtol=1e-6)
    # bivariate margins: set the third coordinate to 1
    pts[:, 2] = 1.0
    np.testing.assert_allclose(cop.cdf(s, pts), cop.cdf(cop.bivariate_margin(s), pts[:, :2]), rtol=1e-12)
    u = cop.sample(s, 20000, seed=5)
    t = stats.kendalltau(u[:, 0], u[:, 2]).statistic
    assert t == pytest.approx(cop.tau(s), abs=0.015)


def test_frank_theta_zero_is_independence():
    s = CopulaSpec("frank", 0.0)
    pts = np.array([[0.3, 0.7], [0.5, 0.5]])
    np.testing.assert_array_equal(cop.cdf(s, pts), pts.prod(axis=1))
    np.testing.assert_array_equal(cop.density(s, pts), [1.0, 1.0])
    assert cop.tau(s) == 0.0
    # tiny theta stays close to independence without cancellation
    s = CopulaSpec("frank", 1e-9)
    np.testing.assert_allclose(cop.cdf(s, pts), pts.prod(axis=1), rtol=1e-8)


@settings(max_examples=60, deadline=None)
@given(u=unit, v=unit, theta=st.floats(-60.0, 200.0).filter(lambda t: abs(t) > 1e-3))
def test_frank_radial_symmetry_at_strong_dependence(u, v, theta):
    # C(u, v) = u + v - 1 + C(1 - u, 1 - v) and the same for the conditional cdf
    s = CopulaSpec("frank", theta)
    lhs = cop.cdf(s, [u, v])
    rhs = u + v - 1.0 + cop.cdf(s, [1.0 - u, 1.0 - v])
    assert lhs == pytest.approx(rhs, abs=1e-12)
    p = cop.partial_cdf(s, [u, v], (0,))
    q = cop.partial_cdf(s, [1.0 - u, 1.0 - v], (0,))
    assert p == pytest.approx(1.0 - q, abs=1e-9)


@pytest.mark.parametrize("theta", [-30.0, 50.0, 150.0])
def test_frank_sampler_inverts_conditional_cdf(theta):
    s = CopulaSpec("frank", theta)
    rng = np.random.default_rng(2)
    u, w = rng.uniform(size=200), rng.uniform(size=200)
    x = cop.sample(s, 200, seed=np.random.default_rng(2))
    np.testing.assert_array_equal(x[:, 0], u)
    ok = (x[:, 1] > 1e-12) & (x[:, 1] < 1 - 1e-12)
    np.testing.assert_allclose(cop.partial_cdf(s, x[ok], (0,)), w[ok], atol=1e-8)


# ---------------------------------------------------------------------------
# parameter gradients


def test_grad_theta_gaussian_is_bivariate_density():
    # d/drho Phi_2(x, y; rho) = phi_2(x, y; rho)
    rho = 0.4
    s = CopulaSpec("gaussian", rho)
    x, y = stats.norm.ppf([0.3, 0.8])
    ref = stats.multivariate_normal(cov=[[1, rho], [rho, 1]]).pdf([x, y])
    assert cop.grad_theta(s, [0.3, 0.8])[0] == pytest.approx(ref, rel=1e-7)


def test_grad_theta_clayton_analytic():
    th, u, v = 2.0, 0.4, 0.7
    a = u**-th + v**-th - 1
    dadth = -math.log(u) * u**-th - math.log(v) * v**-th
    ref = clayton_cdf(u, v, th) * (math.log(a) / th**2 - dadth / (th * a))
    assert cop.grad_theta(CopulaSpec("clayton", th), [u, v])[0] == pytest.approx(ref, rel=1e-7)


def test_grad_theta_shapes_and_student():
    s = CopulaSpec("student", (0.3, 5))
    g = cop.grad_theta(s, np.array([[0.5, 0.5], [0.75, 0.55]]))
    assert g.shape == (2, 2)
    # C(0.5, 0.5) does not depend on nu
    assert abs(g[0, 1]) < 1e-6


def test_grad_theta_step_size_error():
    with pytest.raises(StepSizeError):
        cop.grad_theta(CopulaSpec("gumbel", 1.0), [0.5, 0.5])


# ---------------------------------------------------------------------------
# errors


def test_invalid_parameters():
    with pytest.raises(InvalidParameterError):
        CopulaSpec("clayton", -1.0)
    with pytest.raises(InvalidParameterError):
        CopulaSpec("gaussian", 1.0)
    with pytest.raises(InvalidParameterError):
        CopulaSpec("frank", -2.0, dim=3)
    with pytest.raises(InvalidParameterError):
        CopulaSpec("student", (0.3, 2.5))
    CopulaSpec("student", (0.3, 2.5), nu_grid=None)
    with pytest.raises(UnsupportedError):
        CopulaSpec("gaussian", 0.3, dim=3)
    with pytest.raises(ValueError):
        CopulaSpec("galambos", 1.0)


def test_domain_errors():
    s = CopulaSpec("clayton", 2.0)
    with pytest.raises(DomainError):
        cop.cdf(s, [1.2, 0.5])
    with pytest.raises(DomainError):
        cop.partial_cdf(s, [0.0, 0.5], (0,))
    with pytest.raises(DomainError):
        cop.cdf(s, [0.5, 0.5, 0.5])


def test_tau_range_errors():
    with pytest.raises(RangeError):
        cop.tau_inverse("clayton", -0.2)
    with pytest.raises(RangeError):
        cop.tau_inverse("gumbel", 1.0)
    with pytest.raises(RangeError):
        cop.tau_inverse("frank", 1.0)
    assert cop.tau_inverse("frank", -0.5)[0] < 0
