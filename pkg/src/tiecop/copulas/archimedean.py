"""Clayton, Frank and Gumbel copulas in any dimension d >= 2.

All three are written as C(u) = psi(sum_j phi(u_j)).  Mixed partial
derivatives with respect to a coordinate subset B are

    d_B C(u) = psi^(|B|)(t) * prod_{j in B} phi'(u_j),

with t = sum_j phi(u_j), so only the generator derivatives psi^(k) are family
specific.  Everything is evaluated in log space where overflow is possible.
"""

import math

import numpy as np
from scipy import integrate, optimize, special

from ..errors import InvalidParameterError, RangeError
from ._base import Bound, CopulaFamily, independence_partial, zero_rows


def _eulerian_row(m):
    """Eulerian numbers A(m, 0..m-1); A(0, .) = [1] by convention."""
    row = [1]
    for n in range(1, m + 1):
        new = []
        for k in range(n):
            left = row[k - 1] if 0 <= k - 1 < len(row) else 0
            right = row[k] if k < len(row) else 0
            new.append((k + 1) * right + (n - k) * left)
        row = new
    return row


class Clayton(CopulaFamily):
    name = "clayton"
    bounds = (Bound(0.0, math.inf),)

    @staticmethod
    def _log1p_t(theta, logu):
        # log(1 + sum_j (u_j^-theta - 1)) without overflow
        a = -theta * logu
        amax = np.max(a, axis=1)
        with np.errstate(over="ignore", invalid="ignore"):
            small = np.log1p(np.sum(np.expm1(a), axis=1))
            shifted = np.exp(a - amax[:, None]).sum(axis=1) - (a.shape[1] - 1) * np.exp(-amax)
            large = amax + np.log(shifted)
        return np.where(amax > 30.0, large, small)

    def cdf(self, theta, u):
        (th,) = theta
        out = np.zeros(u.shape[0])
        pos = np.all(u > 0.0, axis=1)
        if np.any(pos):
            lt = self._log1p_t(th, np.log(u[pos]))
            out[pos] = np.exp(-lt / th)
        return out

    def partial(self, theta, u, B):
        (th,) = theta
        if not B:
            return self.cdf(theta, u)
        k = len(B)
        out = np.zeros(u.shape[0])
        ok = ~zero_rows(u, B)
        if not np.any(ok):
            return out
        uu = u[ok]
        logu = np.log(uu)
        lt = self._log1p_t(th, logu)
        logc = sum(math.log1p(i * th) for i in range(k))
        logv = logc - (1.0 / th + k) * lt - (th + 1.0) * logu[:, list(B)].sum(axis=1)
        out[ok] = np.exp(logv)
        return out

    def sample(self, theta, n, dim, rng):
        (th,) = theta
        v = rng.gamma(1.0 / th, 1.0, size=n)
        e = rng.exponential(size=(n, dim))
        return np.exp(-np.log1p(e / v[:, None]) / th)

    def tau(self, theta):
        (th,) = theta
        return th / (th + 2.0)

    def tau_inverse(self, tau, aux=None):
        if not 0.0 < tau < 1.0:
            raise RangeError(f"clayton attains tau in (0, 1), got {tau}")
        return (2.0 * tau / (1.0 - tau),)

    def tau_range(self, dim=2):
        return (0.0, 1.0)


class Gumbel(CopulaFamily):
    name = "gumbel"
    bounds = (Bound(1.0, math.inf, lower_closed=True),)

    @staticmethod
    def _coefficients(alpha, k):
        # psi^(k)(t) = psi(t) * sum_j c[j] t^(j*alpha - k); returns |c|
        c = np.zeros(k + 1)
        c[0] = 1.0
        for step in range(k):
            new = np.zeros(k + 1)
            for j in range(step + 1):
                if c[j] == 0.0:
                    continue
                new[j] += c[j] * (j * alpha - step)
                new[j + 1] += -alpha * c[j]
            c = new
        return np.abs(c)

    def cdf(self, theta, u):
        (th,) = theta
        out = np.zeros(u.shape[0])
        pos = np.all(u > 0.0, axis=1)
        if np.any(pos):
            t = np.sum((-np.log(u[pos])) ** th, axis=1)
            out[pos] = np.exp(-(t ** (1.0 / th)))
        return out

    def partial(self, theta, u, B):
        (th,) = theta
        if not B:
            return self.cdf(theta, u)
        if th == 1.0:
            return independence_partial(u, B)
        k = len(B)
        alpha = 1.0 / th
        out = np.zeros(u.shape[0])
        ok = ~zero_rows(u, B)
        if not np.any(ok):
            return out
        uu = u[ok]
        mlog = -np.log(uu)
        t = np.sum(mlog**th, axis=1)
        logt = np.log(t)
        coef = self._coefficients(alpha, k)
        js = np.nonzero(coef)[0]
        terms = np.stack([math.log(coef[j]) + (j * alpha - k) * logt for j in js], axis=1)
        log_sum = special.logsumexp(terms, axis=1)
        # |phi'(u)| = theta * (-log u)^(theta-1) / u
        bl = list(B)
        log_dphi = (np.log(th) + (th - 1.0) * np.log(mlog[:, bl]) + mlog[:, bl]).sum(axis=1)
        out[ok] = np.exp(-(t**alpha) + log_sum + log_dphi)
        return out

    def sample(self, theta, n, dim, rng):
        (th,) = theta
        alpha = 1.0 / th
        e = rng.exponential(size=(n, dim))
        if alpha == 1.0:
            return np.exp(-e)
        # positive alpha-stable frailty with Laplace transform exp(-s^alpha) (Kanter)
        ang = rng.uniform(0.0, np.pi, size=n)
        w = rng.exponential(size=n)
        a = (
            np.sin(alpha * ang) ** alpha * np.sin((1.0 - alpha) * ang) ** (1.0 - alpha) / np.sin(ang)
        ) ** (1.0 / (1.0 - alpha))
        v = (a / w) ** ((1.0 - alpha) / alpha)
        return np.exp(-((e / v[:, None]) ** alpha))

    def tau(self, theta):
        (th,) = theta
        return 1.0 - 1.0 / th

    def tau_inverse(self, tau, aux=None):
        if not 0.0 <= tau < 1.0:
            raise RangeError(f"gumbel attains tau in [0, 1), got {tau}")
        return (1.0 / (1.0 - tau),)

    def tau_range(self, dim=2):
        return (0.0, 1.0)


def _debye_integrand(t):
    return t / math.expm1(t) if t != 0.0 else 1.0


def _frank_tau(theta):
    if abs(theta) < 1e-3:
        return theta / 9.0 - theta**3 / 900.0
    # 1 + 4 (D1(theta) - 1) / theta, with D1 - 1 integrated directly to avoid cancellation
    val, _ = integrate.quad(lambda t: _debye_integrand(t) - 1.0, 0.0, theta, epsabs=1e-15, epsrel=1e-13, limit=200)
    return 1.0 + 4.0 * (val / theta) / theta


class Frank(CopulaFamily):
    """Frank copula; negative parameters are only admissible for d = 2."""

    name = "frank"
    bounds = (Bound(-math.inf, math.inf),)

    def validate(self, theta, dim):
        super().validate(theta, dim)
        if dim > 2 and theta[0] < 0:
            raise InvalidParameterError("frank with d > 2 needs theta >= 0")

    @staticmethod
    def _log_g(theta, u):
        # log of exp(-phi(u)) = log(expm1(-theta u) / expm1(-theta))
        with np.errstate(divide="ignore"):
            return np.log(np.expm1(-theta * u) / math.expm1(-theta))

    def _z_over_theta(self, theta, u):
        lg = self._log_g(theta, u).sum(axis=1)
        scale = -math.expm1(-theta) / theta
        return scale * np.exp(lg), -math.expm1(-theta) * np.exp(lg)

    @staticmethod
    def _one_minus_z(theta, u, z):
        # for theta > 0, 1 - z = ((1-b)^(d-1) - prod(1-a_j)) / (1-b)^(d-1) with
        # a_j = exp(-theta u_j), b = exp(-theta); both terms are near one when
        # theta u_j is large, so form their complements with expm1 instead
        if theta < 0:
            return 1.0 - z
        with np.errstate(divide="ignore"):
            la = np.log1p(-np.exp(-theta * u)).sum(axis=1)
        lb = (u.shape[1] - 1) * math.log1p(-math.exp(-theta))
        numer = np.expm1(lb) - np.expm1(la)
        return np.where(z < 0.5, 1.0 - z, numer / math.exp(lb))

    def cdf(self, theta, u):
        (th,) = theta
        if th == 0.0:
            return np.prod(u, axis=1)
        zt, z = self._z_over_theta(th, u)
        omz = self._one_minus_z(th, u, z)
        # log1p(-z)/z -> -1 as z -> 0; keep the z/theta factor exact
        with np.errstate(divide="ignore", invalid="ignore"):
            log_omz = np.where(z < 0.5, np.log1p(-z), np.log(omz))
            ratio = np.where(z == 0.0, 1.0, -log_omz / z)
        return zt * ratio

    def partial(self, theta, u, B):
        (th,) = theta
        if not B:
            return self.cdf(theta, u)
        if th == 0.0:
            return independence_partial(u, B)
        k = len(B)
        out = np.zeros(u.shape[0])
        ok = ~zero_rows(u, B)
        if not np.any(ok):
            return out
        uu = u[ok]
        zt, z = self._z_over_theta(th, uu)
        poly = np.polyval(_eulerian_row(k - 1)[::-1], z)
        # (-1)^k psi^(k)(t) = (z/theta) * P_{k-1}(z) / (1-z)^k ; (-1)^k prod phi' = prod theta/expm1(theta u)
        bl = list(B)
        dphi = np.prod(th / np.expm1(th * uu[:, bl]), axis=1)
        out[ok] = zt * poly / self._one_minus_z(th, uu, z) ** k * dphi
        return out

    def sample(self, theta, n, dim, rng):
        (th,) = theta
        if th == 0.0:
            return rng.uniform(size=(n, dim))
        if dim == 2:
            u = rng.uniform(size=n)
            w = rng.uniform(size=n)
            # v = -log(((1-w) a + w b) / (w + (1-w) a)) / theta, a = e^{-theta u}, b = e^{-theta}
            with np.errstate(divide="ignore"):
                lw, l1w = np.log(w), np.log1p(-w)
            num = np.logaddexp(l1w - th * u, lw - th)
            den = np.logaddexp(lw, l1w - th * u)
            v = np.clip(-(num - den) / th, 0.0, 1.0)
            return np.column_stack([u, v])
        v = rng.logseries(-math.expm1(-th), size=n).astype(float)
        e = rng.exponential(size=(n, dim))
        return -np.log1p(math.expm1(-th) * np.exp(-e / v[:, None])) / th

    def tau(self, theta):
        return _frank_tau(theta[0])

    def tau_inverse(self, tau, aux=None):
        if not -1.0 < tau < 1.0:
            raise RangeError(f"frank attains tau in (-1, 1), got {tau}")
        if tau == 0.0:
            return (0.0,)
        f = lambda th: self.tau((th,)) - tau
        hi = 1.0
        while f(math.copysign(hi, tau)) * math.copysign(1.0, tau) < 0:
            hi *= 2.0
            if hi > 1e6:
                raise RangeError(f"frank: tau {tau} too extreme to invert")
        lo_b, hi_b = sorted((0.0, math.copysign(hi, tau)))
        if lo_b == 0.0:
            lo_b = 1e-300
        else:
            hi_b = -1e-300
        root = optimize.brentq(f, lo_b, hi_b, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
        return (root,)

    def tau_range(self, dim=2):
        return (-1.0, 1.0) if dim == 2 else (0.0, 1.0)
