"""Margin models and pseudo-observations.

An :class:`EmpiricalMargin` evaluates the rescaled empirical cdf
``F_n(y) = #{X_i <= y} / (n + 1)`` and its left limit.  Pseudo-observations
carry, for each coordinate, the value ``u``, the left limit ``u_minus`` and an
atom flag; the likelihood only ever looks at these three arrays.

Atom coordinates need an interval (u_minus, u] whose length is the atom's
mass.  By default that interval is taken on the ``count / n`` scale, so the
cells of a purely discrete table have total mass one (``atom_scale="n"``);
``atom_scale="n+1"`` keeps the ``count / (n + 1)`` scale for every coordinate.
Non-atom coordinates always use ``count / (n + 1)``.

Atom membership is decided by exact equality of floating point values: round
your data before declaring atoms.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .errors import ConfigurationError, DataError

INFORMED = "informed"
NON_INFORMED = "non_informed"
_MODES = (INFORMED, NON_INFORMED)


def _check_mode(mode):
    mode = mode.replace("-", "_")
    if mode not in _MODES:
        raise ConfigurationError(f"unknown atom mode {mode!r}; use 'informed' or 'non_informed'")
    return mode


def _as_column(column):
    x = np.asarray(column, dtype=float).ravel()
    if x.size == 0:
        raise DataError("empty column")
    if not np.all(np.isfinite(x)):
        raise DataError("column contains NaN or infinite values")
    return x


@dataclass(frozen=True)
class EmpiricalMargin:
    support: np.ndarray
    counts: np.ndarray
    n: int
    atom_set: frozenset | None = None
    cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "cum", np.cumsum(self.counts))

    @property
    def scale(self) -> int:
        return self.n + 1

    def _count_le(self, y):
        idx = np.searchsorted(self.support, y, side="right")
        return np.where(idx > 0, self.cum[np.maximum(idx - 1, 0)], 0)

    def _count_lt(self, y):
        idx = np.searchsorted(self.support, y, side="left")
        return np.where(idx > 0, self.cum[np.maximum(idx - 1, 0)], 0)

    def eval(self, y):
        """F_n(y) = #{X_i <= y} / (n + 1)."""
        return self._count_le(np.asarray(y, dtype=float)) / self.scale

    def eval_left(self, y):
        """Left limit F_n(y-) = #{X_i < y} / (n + 1)."""
        return self._count_lt(np.asarray(y, dtype=float)) / self.scale

    def multiplicity(self, y):
        y = np.asarray(y, dtype=float)
        return self._count_le(y) - self._count_lt(y)

    def is_atom(self, y, mode=NON_INFORMED):
        """Atom flag for value(s) ``y``.

        ``non_informed``: the value occurs at least twice in the sample.
        ``informed``: the value belongs to the declared ``atom_set``.
        """
        mode = _check_mode(mode)
        y = np.asarray(y, dtype=float)
        if mode == INFORMED:
            if self.atom_set is None:
                raise ConfigurationError("informed mode requires declared atoms")
            atoms = np.fromiter(self.atom_set, dtype=float, count=len(self.atom_set))
            return np.isin(y, atoms)
        return self.multiplicity(y) >= 2

    def atom_masses(self, mode=NON_INFORMED):
        """Jump sizes count / n at the atoms of the margin."""
        mask = self.is_atom(self.support, mode)
        return self.counts[mask] / self.n

    def quantile(self, u):
        """Generalised inverse inf{x : F_n(x) >= u}."""
        u = np.asarray(u, dtype=float)
        vals = self.cum / self.scale
        idx = np.searchsorted(vals, u, side="left")
        idx = np.minimum(idx, self.support.size - 1)
        return self.support[idx]

    def range_values(self):
        """Distinct values of the unscaled empirical cdf, ending with 1."""
        return self.cum / self.n


def fit_empirical(column, atoms=None) -> EmpiricalMargin:
    """Empirical margin of a data column.

    Parameters
    ----------
    column : array-like
        Finite observations.
    atoms : iterable of float, optional
        Declared atoms for the informed likelihood.  Must be finite.
    """
    x = _as_column(column)
    support, counts = np.unique(x, return_counts=True)
    atom_set = None
    if atoms is not None:
        atom_set = frozenset(float(a) for a in atoms)
        if not all(np.isfinite(a) for a in atom_set):
            raise ConfigurationError("declared atoms must be finite numbers")
    return EmpiricalMargin(support=support, counts=counts, n=x.size, atom_set=atom_set)


# ---------------------------------------------------------------------------
# parametric margins


@dataclass(frozen=True)
class ParametricMargin:
    """Maximum-likelihood margin: ``normal`` (mu, sigma), ``poisson`` (lam),
    or ``zinormal`` (p0, mu, sigma) with a point mass at zero."""

    family: str
    params: tuple
    n: int

    @property
    def atom_set(self):
        if self.family == "zinormal":
            return frozenset({0.0})
        return None

    def eval(self, y):
        y = np.asarray(y, dtype=float)
        if self.family == "normal":
            mu, sigma = self.params
            return special.ndtr((y - mu) / sigma)
        if self.family == "poisson":
            (lam,) = self.params
            return stats.poisson.cdf(np.floor(y), lam)
        p0, mu, sigma = self.params
        return p0 * (y >= 0) + (1.0 - p0) * special.ndtr((y - mu) / sigma)

    def eval_left(self, y):
        y = np.asarray(y, dtype=float)
        if self.family == "normal":
            return self.eval(y)
        if self.family == "poisson":
            (lam,) = self.params
            fl = np.floor(y)
            return np.where(fl == y, stats.poisson.cdf(y - 1, lam), stats.poisson.cdf(fl, lam))
        p0, mu, sigma = self.params
        return p0 * (y > 0) + (1.0 - p0) * special.ndtr((y - mu) / sigma)

    def is_atom(self, y, mode=INFORMED):
        y = np.asarray(y, dtype=float)
        if self.family == "normal":
            return np.zeros(y.shape, dtype=bool)
        if self.family == "poisson":
            return (y >= 0) & (np.floor(y) == y)
        return y == 0.0

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        if self.family == "normal":
            mu, sigma = self.params
            return mu + sigma * special.ndtri(u)
        if self.family == "poisson":
            (lam,) = self.params
            return stats.poisson.ppf(u, lam)
        p0, mu, sigma = self.params
        below = (1.0 - p0) * special.ndtr(-mu / sigma)
        with np.errstate(divide="ignore", invalid="ignore"):
            lo = mu + sigma * special.ndtri(u / (1.0 - p0))
            hi = mu + sigma * special.ndtri((u - p0) / (1.0 - p0))
        return np.where(u <= below, lo, np.where(u <= below + p0, 0.0, hi))


def fit_parametric(column, family: str) -> ParametricMargin:
    """Per-column maximum likelihood, done before (and independently of) the copula."""
    x = _as_column(column)
    n = x.size
    if family == "normal":
        return ParametricMargin("normal", (float(x.mean()), float(x.std())), n)
    if family == "poisson":
        if np.any(x < 0) or np.any(np.floor(x) != x):
            raise DataError("poisson margin needs non-negative integers")
        return ParametricMargin("poisson", (float(x.mean()),), n)
    if family == "zinormal":
        zero = x == 0.0
        rest = x[~zero]
        if rest.size < 2 or zero.sum() == 0:
            raise DataError("zero-inflated normal needs zeros and at least two non-zero values")
        # the likelihood factorises: Bernoulli mass at zero times a normal on the rest
        return ParametricMargin("zinormal", (float(zero.mean()), float(rest.mean()), float(rest.std())), n)
    raise ConfigurationError(f"unknown parametric margin {family!r}")


# ---------------------------------------------------------------------------
# pseudo-observations


@dataclass
class PseudoRows:
    """Per-observation (u, u_minus, is_atom) triples, stored as three ``(n, d)`` arrays."""

    u: np.ndarray
    u_minus: np.ndarray
    atom: np.ndarray
    _compressed: tuple | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.u = np.atleast_2d(np.asarray(self.u, dtype=float))
        self.u_minus = np.atleast_2d(np.asarray(self.u_minus, dtype=float))
        self.atom = np.atleast_2d(np.asarray(self.atom, dtype=bool))
        if not (self.u.shape == self.u_minus.shape == self.atom.shape):
            raise DataError("u, u_minus and atom must share a shape")
        if np.any(self.u_minus > self.u):
            raise DataError("u_minus must not exceed u")

    @property
    def n(self) -> int:
        return self.u.shape[0]

    @property
    def dim(self) -> int:
        return self.u.shape[1]

    def __len__(self):
        return self.n

    def __getitem__(self, idx):
        return PseudoRows(self.u[idx], self.u_minus[idx], self.atom[idx])

    def columns(self, cols) -> "PseudoRows":
        cols = list(cols)
        return PseudoRows(self.u[:, cols], self.u_minus[:, cols], self.atom[:, cols])

    def as_continuous(self) -> "PseudoRows":
        return PseudoRows(self.u, self.u, np.zeros_like(self.atom))

    def compressed(self):
        """Distinct rows with their multiplicities (cached)."""
        if self._compressed is None:
            stacked = np.concatenate([self.u, self.u_minus, self.atom.astype(float)], axis=1)
            uniq, counts = np.unique(stacked, axis=0, return_counts=True)
            d = self.dim
            self._compressed = (
                PseudoRows(uniq[:, :d], uniq[:, d : 2 * d], uniq[:, 2 * d :] > 0.5),
                counts.astype(float),
            )
        return self._compressed


def pseudo_observations(data, margins, mode=NON_INFORMED, atom_scale="n") -> PseudoRows:
    """Pseudo-observations of an ``(n, d)`` data matrix under fitted margins.

    Parameters
    ----------
    data : array-like, shape (n, d)
    margins : sequence of margins, one per column
    mode : {"informed", "non_informed"}
        How atom flags are decided.
    atom_scale : {"n", "n+1"}
        Scale of the (u_minus, u] interval for atom coordinates of empirical
        margins.
    """
    mode = _check_mode(mode)
    if atom_scale not in ("n", "n+1"):
        raise ConfigurationError("atom_scale must be 'n' or 'n+1'")
    x = np.asarray(data, dtype=float)
    if x.ndim != 2 or x.shape[1] != len(margins):
        raise DataError("data must be an (n, d) matrix with one margin per column")
    if x.shape[0] == 0:
        raise DataError("no observations")
    if not np.all(np.isfinite(x)):
        raise DataError("data contains NaN or infinite values")
    u = np.empty(x.shape)
    um = np.empty(x.shape)
    atom = np.empty(x.shape, dtype=bool)
    for j, m in enumerate(margins):
        col = x[:, j]
        flag = m.is_atom(col, mode) if isinstance(m, EmpiricalMargin) else m.is_atom(col)
        atom[:, j] = flag
        if isinstance(m, EmpiricalMargin):
            le = m._count_le(col)
            lt = m._count_lt(col)
            u[:, j] = le / (m.n + 1)
            um[:, j] = lt / (m.n + 1)
            if atom_scale == "n":
                u[flag, j] = le[flag] / m.n
                um[flag, j] = lt[flag] / m.n
        else:
            u[:, j] = m.eval(col)
            um[:, j] = m.eval_left(col)
    return PseudoRows(u, um, atom)


def vn_statistic(masses, n: int) -> float:
    """n * sum_x m_x (1 - m_x)^(n-1): expected count of atom values seen only once."""
    m = np.asarray(masses, dtype=float)
    if m.size == 0:
        return 0.0
    return float(n * np.sum(m * np.exp((n - 1) * np.log1p(-np.minimum(m, 1.0 - 1e-300)))))


def vn_diagnostic(margin, mode=INFORMED) -> float:
    """Tie diagnostic computed from a margin's jump sizes (0 for no atoms)."""
    if isinstance(margin, EmpiricalMargin):
        if mode == INFORMED and margin.atom_set is None:
            return 0.0
        return vn_statistic(margin.atom_masses(mode), margin.n)
    if margin.family == "poisson":
        (lam,) = margin.params
        ks = np.arange(0, int(lam + 40 * np.sqrt(lam) + 50))
        return vn_statistic(stats.poisson.pmf(ks, lam), margin.n)
    if margin.family == "zinormal":
        return vn_statistic([margin.params[0]], margin.n)
    return 0.0
