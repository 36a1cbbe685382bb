import math

import numpy as np
from scipy import optimize

from ..errors import RangeError
from ._base import Bound, CopulaFamily

_GL_X, _GL_W = np.polynomial.legendre.leggauss(160)
_NODES = 0.5 * (_GL_X + 1.0)
_WEIGHTS = 0.5 * _GL_W


class Plackett(CopulaFamily):
    """Bivariate Plackett copula, theta > 0 (theta = 1 is independence)."""

    name = "plackett"
    max_dim = 2
    bounds = (Bound(0.0, math.inf),)

    @staticmethod
    def _parts(th, u, v):
        a = 1.0 + (th - 1.0) * (u + v)
        s = a * a - 4.0 * th * (th - 1.0) * u * v
        return a, np.sqrt(np.maximum(s, 0.0))

    def cdf(self, theta, u):
        (th,) = theta
        x, y = u[:, 0], u[:, 1]
        a, r = self._parts(th, x, y)
        # rationalised form, no cancellation near theta = 1
        with np.errstate(invalid="ignore", divide="ignore"):
            out = 2.0 * th * x * y / (a + r)
        return np.nan_to_num(out, nan=0.0)

    def _h(self, th, x, y):
        # d/dx C(x, y)
        a, r = self._parts(th, x, y)
        return 0.5 - (a - 2.0 * th * y) / (2.0 * r)

    def partial(self, theta, u, B):
        (th,) = theta
        if not B:
            return self.cdf(theta, u)
        x, y = u[:, 0], u[:, 1]
        if len(B) == 2:
            a, r = self._parts(th, x, y)
            return th * (1.0 + (th - 1.0) * (x + y - 2.0 * x * y)) / r**3
        if B[0] == 0:
            return self._h(th, x, y)
        return self._h(th, y, x)

    def sample(self, theta, n, dim, rng):
        (th,) = theta
        u = rng.uniform(size=n)
        t = rng.uniform(size=n)
        a = t * (1.0 - t)
        b = th + a * (th - 1.0) ** 2
        c = 2.0 * a * (u * th * th + 1.0 - u) + th * (1.0 - 2.0 * a)
        d = math.sqrt(th) * np.sqrt(th + 4.0 * a * u * (1.0 - u) * (1.0 - th) ** 2)
        v = (c - (1.0 - 2.0 * t) * d) / (2.0 * b)
        return np.column_stack([u, v])

    def tau(self, theta):
        """Kendall's tau as 1 - 4 * int int dC/du dC/dv, on a fixed Gauss-Legendre grid."""
        (th,) = theta
        if th == 1.0:
            return 0.0
        xx, yy = np.meshgrid(_NODES, _NODES, indexing="ij")
        x, y = xx.ravel(), yy.ravel()
        integrand = self._h(th, x, y) * self._h(th, y, x)
        ww = np.outer(_WEIGHTS, _WEIGHTS).ravel()
        return 1.0 - 4.0 * float(np.dot(ww, integrand))

    def tau_inverse(self, tau, aux=None):
        if not -1.0 < tau < 1.0:
            raise RangeError(f"plackett attains tau in (-1, 1), got {tau}")
        if tau == 0.0:
            return (1.0,)
        f = lambda z: self.tau((math.exp(z),)) - tau
        hi = 1.0
        while f(math.copysign(hi, tau)) * math.copysign(1.0, tau) < 0:
            hi *= 2.0
            if hi > 40:
                raise RangeError(f"plackett: tau {tau} too extreme to invert")
        lo_b, hi_b = sorted((0.0, math.copysign(hi, tau)))
        z = optimize.brentq(f, lo_b, hi_b, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
        return (math.exp(z),)
