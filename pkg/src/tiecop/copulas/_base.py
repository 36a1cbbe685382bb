import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidParameterError

# interior clamp applied to coordinates that are differentiated
EPS_CLAMP = 1e-10


@dataclass(frozen=True)
class Bound:
    lower: float
    upper: float
    lower_closed: bool = False
    upper_closed: bool = False

    def contains(self, x):
        lo_ok = x >= self.lower if self.lower_closed else x > self.lower
        hi_ok = x <= self.upper if self.upper_closed else x < self.upper
        return bool(lo_ok and hi_ok) and math.isfinite(x)

    def to_free(self, x):
        """Map a value in the box to the real line (identity, log or scaled logit)."""
        lo_inf = not math.isfinite(self.lower)
        hi_inf = not math.isfinite(self.upper)
        if lo_inf and hi_inf:
            return float(x)
        if hi_inf:
            return math.log(x - self.lower) if x > self.lower else -40.0
        if lo_inf:
            return math.log(self.upper - x)
        s = (x - self.lower) / (self.upper - self.lower)
        s = min(max(s, 1e-16), 1 - 1e-16)
        return math.log(s / (1.0 - s))

    def from_free(self, z):
        lo_inf = not math.isfinite(self.lower)
        hi_inf = not math.isfinite(self.upper)
        if lo_inf and hi_inf:
            return float(z)
        if hi_inf:
            return self.lower + math.exp(min(z, 700.0))
        if lo_inf:
            return self.upper - math.exp(min(z, 700.0))
        return self.lower + (self.upper - self.lower) / (1.0 + math.exp(-max(min(z, 700.0), -700.0)))


class CopulaFamily:
    """Evaluation kernels for one parametric family.

    Subclasses work on arrays ``u`` of shape ``(m, d)`` and a parameter tuple.
    ``partial`` receives a sorted tuple of 0-based coordinate indices.
    """

    name = ""
    n_params = 1
    max_dim = None
    bounds: tuple = ()

    def validate(self, theta, dim):
        if len(theta) != self.n_params:
            raise InvalidParameterError(
                f"{self.name} expects {self.n_params} parameter(s), got {len(theta)}"
            )
        for value, bound in zip(theta, self.bounds):
            if not bound.contains(value):
                raise InvalidParameterError(f"{self.name} parameter {value!r} outside {bound}")

    def cdf(self, theta, u):
        raise NotImplementedError

    def partial(self, theta, u, B):
        raise NotImplementedError

    def density(self, theta, u):
        return self.partial(theta, u, tuple(range(u.shape[1])))

    def sample(self, theta, n, dim, rng):
        raise NotImplementedError

    def tau(self, theta):
        raise NotImplementedError

    def tau_inverse(self, tau, aux=None):
        raise NotImplementedError

    def tau_range(self, dim=2):
        return (-1.0, 1.0)

    def bivariate(self, theta):
        """Parameter of the (k, l) bivariate margin of the d-variate copula."""
        return theta


def independence_partial(u, B):
    keep = [j for j in range(u.shape[1]) if j not in B]
    if not keep:
        return np.ones(u.shape[0])
    return np.prod(u[:, keep], axis=1)


def zero_rows(u, B):
    """Rows where a non-differentiated coordinate equals 0 (value is exactly 0 there)."""
    keep = [j for j in range(u.shape[1]) if j not in B]
    if not keep:
        return np.zeros(u.shape[0], dtype=bool)
    return np.any(u[:, keep] <= 0.0, axis=1)
