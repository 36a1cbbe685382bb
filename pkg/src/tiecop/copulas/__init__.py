"""Parametric copula families: cdf, mixed partials, parameter gradients, Kendall's tau, sampling.

Coordinates are 0-based throughout: ``partial_cdf(spec, u, B=(0,))`` is the
derivative with respect to the first argument.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..errors import DomainError, InvalidParameterError, StepSizeError, UnsupportedError
from ._base import EPS_CLAMP, Bound, CopulaFamily
from .archimedean import Clayton, Frank, Gumbel
from .elliptical import DEFAULT_NU_GRID, Gaussian, Student
from .plackett import Plackett

__all__ = [
    "Family",
    "CopulaSpec",
    "DEFAULT_NU_GRID",
    "cdf",
    "partial_cdf",
    "density",
    "grad_theta",
    "tau",
    "tau_inverse",
    "sample",
    "bivariate_margin",
    "family_impl",
]


class Family(str, Enum):
    CLAYTON = "clayton"
    FRANK = "frank"
    GUMBEL = "gumbel"
    PLACKETT = "plackett"
    GAUSSIAN = "gaussian"
    STUDENT = "student"


_IMPLS = {
    Family.CLAYTON: Clayton(),
    Family.FRANK: Frank(),
    Family.GUMBEL: Gumbel(),
    Family.PLACKETT: Plackett(),
    Family.GAUSSIAN: Gaussian(),
    Family.STUDENT: Student(),
}

ARCHIMEDEAN = frozenset({Family.CLAYTON, Family.FRANK, Family.GUMBEL})


def family_impl(family) -> CopulaFamily:
    return _IMPLS[Family(family)]


@dataclass(frozen=True)
class CopulaSpec:
    """A copula family with a fixed parameter vector.

    Parameters
    ----------
    family : Family or str
    theta : float or sequence of float
        Parameter vector; Student takes ``(rho, nu)``.
    dim : int, default 2
        Archimedean families accept any ``dim >= 2``; the others are bivariate.
    nu_grid : tuple of int or None
        Admissible Student degrees of freedom.  ``None`` allows any ``nu > 0``
        (evaluation only, never used by the estimators).
    """

    family: Family
    theta: tuple
    dim: int = 2
    nu_grid: tuple = field(default=DEFAULT_NU_GRID)

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        th = self.theta
        if np.isscalar(th):
            th = (th,)
        object.__setattr__(self, "theta", tuple(float(t) for t in th))
        if self.nu_grid is not None:
            object.__setattr__(self, "nu_grid", tuple(self.nu_grid))
        impl = self.impl
        if self.dim < 2:
            raise InvalidParameterError("dim must be >= 2")
        if impl.max_dim is not None and self.dim > impl.max_dim:
            raise UnsupportedError(f"{self.family.value} is only implemented for d = {impl.max_dim}")
        impl.validate(self.theta, self.dim)
        if self.family is Family.STUDENT and self.nu_grid is not None:
            if self.theta[1] not in self.nu_grid:
                raise InvalidParameterError(f"student nu={self.theta[1]} not in the configured grid")

    @property
    def impl(self) -> CopulaFamily:
        return _IMPLS[self.family]

    @property
    def n_params(self) -> int:
        return self.impl.n_params

    @property
    def bounds(self) -> tuple:
        return self.impl.bounds

    def with_theta(self, theta) -> "CopulaSpec":
        return CopulaSpec(self.family, theta, self.dim, self.nu_grid)


def _as_points(u, dim):
    arr = np.asarray(u, dtype=float)
    scalar = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != dim:
        raise DomainError(f"points must have {dim} coordinates, got shape {arr.shape}")
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError("copula arguments must lie in [0, 1]")
    return arr, scalar


def _normalise_B(B, dim):
    B = tuple(sorted(set(int(b) for b in B)))
    if any(b < 0 or b >= dim for b in B):
        raise DomainError(f"subset {B} not within 0..{dim - 1}")
    return B


def _unwrap(values, scalar):
    return float(values[0]) if scalar else values


def _eval_partial(spec, u, B):
    # internal: u already validated; clamp differentiated coordinates into the interior
    if B:
        u = u.copy()
        cols = list(B)
        u[:, cols] = np.clip(u[:, cols], EPS_CLAMP, 1.0 - EPS_CLAMP)
    return spec.impl.partial(spec.theta, u, B)


def cdf(spec: CopulaSpec, u):
    """C_theta(u) for a single point (returns float) or an ``(m, d)`` array."""
    pts, scalar = _as_points(u, spec.dim)
    return _unwrap(np.clip(spec.impl.cdf(spec.theta, pts), 0.0, 1.0), scalar)


def partial_cdf(spec: CopulaSpec, u, B=()):
    """Mixed partial derivative of C_theta with respect to the coordinates in ``B``.

    ``B`` empty gives the cdf, the full set gives the density.  Coordinates in
    ``B`` must lie strictly inside (0, 1).
    """
    pts, scalar = _as_points(u, spec.dim)
    B = _normalise_B(B, spec.dim)
    if B and np.any((pts[:, list(B)] <= 0.0) | (pts[:, list(B)] >= 1.0)):
        raise DomainError("differentiated coordinates must lie in (0, 1)")
    return _unwrap(_eval_partial(spec, pts, B), scalar)


def density(spec: CopulaSpec, u):
    return partial_cdf(spec, u, tuple(range(spec.dim)))


def _fd_steps(spec):
    steps = []
    for value, bound in zip(spec.theta, spec.bounds):
        h = max(1e-6, 1e-6 * abs(value))
        if not (bound.contains(value - h) and bound.contains(value + h)):
            h /= 100.0
            if not (bound.contains(value - h) and bound.contains(value + h)):
                raise StepSizeError(f"parameter {value} too close to the boundary of {bound}")
        steps.append(h)
    return steps


def grad_theta(spec: CopulaSpec, u, B=()):
    """Central finite-difference gradient of d_B C_theta(u) with respect to theta.

    Returns an array of shape ``(p,)`` for one point or ``(m, p)`` for many.
    Student's ``nu`` is perturbed continuously, so the grid restriction is
    lifted for the perturbed evaluations.
    """
    pts, scalar = _as_points(u, spec.dim)
    B = _normalise_B(B, spec.dim)
    steps = _fd_steps(spec)
    out = np.empty((pts.shape[0], spec.n_params))
    for i, h in enumerate(steps):
        up = list(spec.theta)
        dn = list(spec.theta)
        up[i] += h
        dn[i] -= h
        s_up = CopulaSpec(spec.family, up, spec.dim, None)
        s_dn = CopulaSpec(spec.family, dn, spec.dim, None)
        out[:, i] = (_eval_partial(s_up, pts, B) - _eval_partial(s_dn, pts, B)) / (2.0 * h)
    return out[0] if scalar else out


def tau(spec: CopulaSpec) -> float:
    """Kendall's tau of the (bivariate margin of the) copula."""
    return float(spec.impl.tau(spec.theta))


def tau_inverse(family, tau_value: float, aux=None) -> tuple:
    """Parameter vector reproducing Kendall's tau; Student needs ``aux=nu``."""
    return family_impl(family).tau_inverse(float(tau_value), aux)


def sample(spec: CopulaSpec, n: int, seed=None) -> np.ndarray:
    """``n`` iid draws from C_theta as an ``(n, d)`` array in (0, 1)^d.

    ``seed`` may be an int, a SeedSequence or a numpy Generator.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u = spec.impl.sample(spec.theta, int(n), spec.dim, rng)
    tiny = np.finfo(float).tiny
    return np.clip(u, tiny, 1.0 - np.finfo(float).epsneg)


def bivariate_margin(spec: CopulaSpec) -> CopulaSpec:
    """Bivariate margin of an exchangeable copula (same parameter for every pair)."""
    if spec.dim == 2:
        return spec
    if spec.family not in ARCHIMEDEAN:
        raise UnsupportedError(f"{spec.family.value} has no d-variate form here")
    return CopulaSpec(spec.family, spec.theta, 2, spec.nu_grid)
