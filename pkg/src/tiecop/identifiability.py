"""Identifiability of a copula parameter with respect to the margins.

With discrete margins the copula is only observed on the product of the
margins' ranges.  A parameter is identifiable when theta -> (C_theta(u))_u,
u ranging over that grid, is injective.  The grid is restricted to points
with at least two coordinates below one (elsewhere C is fixed by the
margins), which leaves ``q_n = prod m_j - sum m_j + d - 1`` points.  A
``p``-parameter family is hopeless when ``p > q_n``; otherwise full column
rank of the Jacobian over a covering of a parameter box gives local
injectivity there.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import copulas as cop
from .copulas import CopulaSpec, Family
from .errors import ConfigurationError, GridTooLargeError
from .margins import EmpiricalMargin, ParametricMargin

NOT_IDENTIFIABLE = "NotIdentifiable_pGTq"
IDENTIFIABLE = "IdentifiableOnNeighborhood"
RANK_DEFICIENT = "RankDeficientSomewhere"

DEFAULT_CAP = 1_000_000
DEFAULT_LEVELS = 25
DEFAULT_RANK_TOL = 1e-7


def q_count(m) -> int:
    """Number of grid points with at least two coordinates below one."""
    m = [int(v) for v in m]
    return math.prod(m) - sum(m) + len(m) - 1


@dataclass(frozen=True)
class IdentGrid:
    """Evaluation grid: ``points`` is ``(q_n, d)``; ``m`` holds the per-coordinate level counts."""

    points: np.ndarray
    m: tuple
    capped: tuple = ()

    @property
    def q_n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return len(self.m)


def _levels(margin, max_levels):
    """Distinct cdf values of one margin (ending with 1) and whether they were thinned."""
    if isinstance(margin, EmpiricalMargin):
        vals = margin.range_values()
    elif isinstance(margin, ParametricMargin):
        if margin.family == "poisson":
            (lam,) = margin.params
            ks = np.arange(0, int(lam + 40 * math.sqrt(lam) + 50))
            vals = margin.eval(ks)
            vals = np.append(vals[vals < 1.0 - 1e-12], 1.0)
        else:
            vals = np.arange(1, max_levels + 1) / max_levels
            if margin.family == "zinormal":
                vals = np.union1d(vals, [float(margin.eval(0.0))])
    else:
        vals = np.asarray(margin, dtype=float)
    vals = np.unique(np.clip(vals, 0.0, 1.0))
    vals = vals[vals > 0.0]
    if vals.size == 0 or vals[-1] != 1.0:
        vals = np.append(vals, 1.0)
    if vals.size <= max_levels:
        return vals, False
    # quantile-spaced thinning, always keeping the closure point 1
    idx = np.unique(np.round(np.linspace(0, vals.size - 1, max_levels)).astype(int))
    return vals[idx], True


def build_grid(margins, cap=DEFAULT_CAP, max_levels=DEFAULT_LEVELS, thin=None) -> IdentGrid:
    """Grid of margin-range points with at least two coordinates below one.

    Parameters
    ----------
    margins : sequence
        Fitted margins, or explicit arrays of cdf values.
    cap : int
        Maximum number of product points before refusing.
    max_levels : int
        Per-coordinate level cap for columns with many distinct values.
    thin : sequence of bool, optional
        Which columns may be thinned; defaults to any column with more than
        ``max_levels`` values.  Pass all ``False`` to keep full ranges.
    """
    d = len(margins)
    if d < 2:
        raise ConfigurationError("need at least two margins")
    cols, capped = [], []
    for j, mg in enumerate(margins):
        limit = max_levels if (thin is None or thin[j]) else np.iinfo(np.int64).max
        vals, was_capped = _levels(mg, limit)
        cols.append(vals)
        if was_capped:
            capped.append(j)
    m = tuple(v.size for v in cols)
    if math.prod(m) > cap:
        raise GridTooLargeError(f"grid of {math.prod(m)} points exceeds the cap of {cap}; subsample or raise the cap")
    mesh = np.stack(np.meshgrid(*cols, indexing="ij"), axis=-1).reshape(-1, d)
    keep = (mesh < 1.0).sum(axis=1) >= 2
    return IdentGrid(points=mesh[keep], m=m, capped=tuple(capped))


def jacobian(spec: CopulaSpec, grid) -> np.ndarray:
    """``(q_n, p)`` matrix of theta-gradients of C_theta at the grid points."""
    pts = grid.points if isinstance(grid, IdentGrid) else np.atleast_2d(np.asarray(grid, dtype=float))
    return np.atleast_2d(cop.grad_theta(spec, pts))


def numeric_rank(J, rank_tol=DEFAULT_RANK_TOL):
    """(rank, singular values) with threshold ``max(q, p) * sigma_1 * rank_tol``."""
    sv = np.linalg.svd(J, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0, sv
    thresh = max(J.shape) * sv[0] * rank_tol
    return int(np.sum(sv > thresh)), sv


@dataclass(frozen=True)
class CenterRank:
    theta: tuple
    rank: int
    sigma_min: float


@dataclass(frozen=True)
class IdentReport:
    q_n: int
    p: int
    verdict: str
    delta: float
    box: tuple
    centers: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "q_n": self.q_n,
            "p": self.p,
            "verdict": self.verdict,
            "delta": self.delta,
            "box": [list(b) for b in self.box],
            "n_centers": len(self.centers),
            "min_rank": min((c.rank for c in self.centers), default=None),
            "min_sigma": min((c.sigma_min for c in self.centers), default=None),
        }


def _lattice(box, delta):
    axes = []
    for lo, hi in box:
        k = max(int(math.ceil((hi - lo) / delta - 1e-12)), 0)
        axes.append(lo + delta * np.arange(k + 1) if k else np.array([lo]))
        axes[-1] = np.minimum(axes[-1], hi)
    return axes


def rank_scan(family, grid, box, delta, rank_tol=DEFAULT_RANK_TOL, dim=None) -> IdentReport:
    """Jacobian rank over a sup-norm lattice of centers covering ``box``.

    Parameters
    ----------
    family : Family or str
    grid : IdentGrid or array of points
    box : sequence of (low, high), one per parameter
    delta : float
        Lattice spacing; sup-norm balls of radius ``delta`` around the
        centers cover the box.
    rank_tol : float
        Relative singular value threshold (finite-difference Jacobians).

    Notes
    -----
    When ``q_n == p`` the Jacobian is square and a sign change of its
    determinant between neighbouring centers also counts as rank deficiency,
    since an exact zero is almost never hit on the lattice.
    """
    family = Family(family)
    pts = grid.points if isinstance(grid, IdentGrid) else np.atleast_2d(np.asarray(grid, dtype=float))
    q = pts.shape[0]
    dim = pts.shape[1] if dim is None else dim
    p = cop.family_impl(family).n_params
    box = tuple((float(lo), float(hi)) for lo, hi in box)
    if p > q:
        return IdentReport(q, p, NOT_IDENTIFIABLE, float(delta), box)
    if len(box) != p:
        raise ConfigurationError(f"box needs {p} intervals, got {len(box)}")
    if not delta > 0 or any(not hi > lo for lo, hi in box):
        raise ConfigurationError("box must have positive volume and delta must be positive")
    axes = _lattice(box, delta)
    centers = []
    dets = {}
    for idx in itertools.product(*(range(a.size) for a in axes)):
        theta = tuple(float(axes[i][k]) for i, k in enumerate(idx))
        J = jacobian(CopulaSpec(family, theta, dim, None), pts)
        r, sv = numeric_rank(J, rank_tol)
        centers.append(CenterRank(theta, r, float(sv[-1]) if sv.size else 0.0))
        if q == p:
            dets[idx] = float(np.linalg.det(J))
    deficient = any(c.rank < p for c in centers)
    if not deficient and dets:
        for idx, det in dets.items():
            for i in range(p):
                nb = idx[:i] + (idx[i] + 1,) + idx[i + 1 :]
                if nb in dets and det * dets[nb] < 0:
                    deficient = True
                    break
            if deficient:
                break
    verdict = RANK_DEFICIENT if deficient else IDENTIFIABLE
    return IdentReport(q, p, verdict, float(delta), box, tuple(centers))
