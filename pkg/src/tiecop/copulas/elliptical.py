"""Bivariate Gaussian and Student-t copulas."""

import math

import numpy as np
from scipy import special, stats

from ..errors import InvalidParameterError, RangeError
from ._base import Bound, CopulaFamily
from ._bivariate import bvn_cdf, bvt_copula_cdf, student_conditional, t_quantile

DEFAULT_NU_GRID = tuple(range(1, 51))



def _elliptical_tau(rho):
    return 2.0 / math.pi * math.asin(rho)


def _elliptical_tau_inverse(tau):
    if not -1.0 < tau < 1.0:
        raise RangeError(f"tau must lie in (-1, 1), got {tau}")
    return math.sin(math.pi * tau / 2.0)


class Gaussian(CopulaFamily):
    name = "gaussian"
    max_dim = 2
    bounds = (Bound(-1.0, 1.0),)

    def cdf(self, theta, u):
        (rho,) = theta
        x = special.ndtri(u)
        return bvn_cdf(x[:, 0], x[:, 1], rho)

    def partial(self, theta, u, B):
        (rho,) = theta
        if not B:
            return self.cdf(theta, u)
        x = special.ndtri(u)
        s = math.sqrt(1.0 - rho * rho)
        if len(B) == 2:
            q = (rho * rho * (x[:, 0] ** 2 + x[:, 1] ** 2) - 2.0 * rho * x[:, 0] * x[:, 1]) / (2.0 * s * s)
            return np.exp(-q) / s
        j = B[0]
        other = 1 - j
        with np.errstate(invalid="ignore"):
            z = (x[:, other] - rho * x[:, j]) / s
        # u_other = 0 gives -inf - finite = -inf; ndtr handles it
        return special.ndtr(z)

    def sample(self, theta, n, dim, rng):
        (rho,) = theta
        z = rng.standard_normal(size=(n, 2))
        z[:, 1] = rho * z[:, 0] + math.sqrt(1.0 - rho * rho) * z[:, 1]
        return special.ndtr(z)

    def tau(self, theta):
        return _elliptical_tau(theta[0])

    def tau_inverse(self, tau, aux=None):
        return (_elliptical_tau_inverse(tau),)


class Student(CopulaFamily):
    """Student-t copula with parameters (rho, nu).

    ``nu`` may be any positive real for evaluation; whether it must belong to a
    finite grid is decided by :class:`~tiecop.copulas.CopulaSpec`.
    """

    name = "student"
    n_params = 2
    max_dim = 2
    bounds = (Bound(-1.0, 1.0), Bound(0.0, math.inf))

    def cdf(self, theta, u):
        rho, nu = theta
        return bvt_copula_cdf(u[:, 0], u[:, 1], rho, nu)

    def partial(self, theta, u, B):
        rho, nu = theta
        if not B:
            return self.cdf(theta, u)
        x = t_quantile(u, nu)
        if len(B) == 2:
            s2 = 1.0 - rho * rho
            q = (x[:, 0] ** 2 + x[:, 1] ** 2 - 2.0 * rho * x[:, 0] * x[:, 1]) / (nu * s2)
            logc = (
                special.gammaln((nu + 2.0) / 2.0)
                + special.gammaln(nu / 2.0)
                - 2.0 * special.gammaln((nu + 1.0) / 2.0)
                - 0.5 * math.log(s2)
                - (nu + 2.0) / 2.0 * np.log1p(q)
                + (nu + 1.0) / 2.0 * (np.log1p(x[:, 0] ** 2 / nu) + np.log1p(x[:, 1] ** 2 / nu))
            )
            return np.exp(logc)
        j = B[0]
        with np.errstate(invalid="ignore"):
            out = student_conditional(x[:, j], x[:, 1 - j], rho, nu)
        return np.where(u[:, 1 - j] <= 0.0, 0.0, np.where(u[:, 1 - j] >= 1.0, 1.0, out))

    def sample(self, theta, n, dim, rng):
        rho, nu = theta
        z = rng.standard_normal(size=(n, 2))
        z[:, 1] = rho * z[:, 0] + math.sqrt(1.0 - rho * rho) * z[:, 1]
        w = rng.chisquare(nu, size=n)
        t = z / np.sqrt(w / nu)[:, None]
        return stats.t.cdf(t, nu)

    def tau(self, theta):
        return _elliptical_tau(theta[0])

    def tau_inverse(self, tau, aux=None):
        if aux is None:
            raise InvalidParameterError("student tau_inverse needs nu as aux")
        return (_elliptical_tau_inverse(tau), float(aux))
