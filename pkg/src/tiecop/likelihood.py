"""Atom-aware pseudo log-likelihoods.

For a row with atom coordinates ``A`` the contribution is ``log K_A`` with

    K_A = sum_{B subset A} (-1)^|B| d_{A^c} C(u^(B)),

where ``u^(B)`` takes ``u_minus`` on ``B`` and ``u`` elsewhere: a density in
the continuous coordinates and a C-volume over ``(u_minus, u]`` in the atom
coordinates.  The atom flags stored in :class:`~tiecop.margins.PseudoRows`
decide ``A``; nothing here re-derives atom status.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .copulas import ARCHIMEDEAN, CopulaSpec, _eval_partial, bivariate_margin
from .errors import ConfigurationError, DataError, DomainError, UnsupportedError
from .margins import PseudoRows

KINDS = ("informed", "non_informed", "naive", "composite_informed", "composite_non_informed")
DEFAULT_PENALTY = -1e10


def _check_kind(kind):
    kind = kind.replace("-", "_")
    if kind not in KINDS:
        raise ConfigurationError(f"unknown likelihood kind {kind!r}; choose from {KINDS}")
    return kind


@dataclass(frozen=True)
class LikelihoodConfig:
    """Likelihood selection.

    ``penalty`` replaces ``log K`` for every row whose term is not positive.
    The left limit used for atom coordinates is always ``F_n(x-)``.
    """

    kind: str = "non_informed"
    penalty: float = DEFAULT_PENALTY

    def __post_init__(self):
        object.__setattr__(self, "kind", _check_kind(self.kind))
        if not self.penalty < -1e6:
            raise ConfigurationError("penalty must be a large negative number")

    @property
    def mode(self) -> str:
        """Atom mode the pseudo-rows must be built with."""
        return "informed" if self.kind in ("informed", "composite_informed") else "non_informed"

    @property
    def composite(self) -> bool:
        return self.kind.startswith("composite")


@dataclass(frozen=True)
class LoglikValue:
    value: float
    penalty_hits: int


def _as_rows(rows):
    if not isinstance(rows, PseudoRows):
        raise DataError("likelihoods take PseudoRows; build them with margins.pseudo_observations")
    if rows.n == 0:
        raise DataError("no observations")
    return rows


def k_term(spec: CopulaSpec, rows: PseudoRows, A=()):
    """Inclusion-exclusion term K_A for every row of ``rows``.

    Parameters
    ----------
    spec : CopulaSpec
    rows : PseudoRows
        Rows whose atom set is exactly ``A``.
    A : sequence of int
        0-based atom coordinates.

    Returns
    -------
    ndarray of shape (n,)
        Raw values; non-positive values are returned unmodified.
    """
    d = rows.dim
    if d != spec.dim:
        raise DomainError(f"rows have {d} coordinates, copula has {spec.dim}")
    A = tuple(sorted(set(int(a) for a in A)))
    if any(a < 0 or a >= d for a in A):
        raise DomainError(f"atom subset {A} not within 0..{d - 1}")
    mask = np.zeros(d, dtype=bool)
    mask[list(A)] = True
    if np.any(rows.atom != mask[None, :]):
        raise DomainError(f"atom subset {A} does not match the rows' atom flags")
    return _k_values(spec, rows.u, rows.u_minus, A)


def _k_values(spec, u, um, A):
    m = u.shape[0]
    comp = tuple(j for j in range(u.shape[1]) if j not in A)
    if not A:
        return _eval_partial(spec, u, comp)
    subsets = [B for r in range(len(A) + 1) for B in itertools.combinations(A, r)]
    pts = np.tile(u, (len(subsets), 1))
    signs = np.empty(len(subsets))
    for s, B in enumerate(subsets):
        if B:
            pts[s * m : (s + 1) * m, list(B)] = um[:, list(B)]
        signs[s] = -1.0 if len(B) % 2 else 1.0
    vals = _eval_partial(spec, pts, comp).reshape(len(subsets), m)
    # sum in a fixed order for reproducibility
    out = np.zeros(m)
    for s in range(len(subsets)):
        out += signs[s] * vals[s]
    return out


def _loglik(spec, rows, penalty):
    if rows.dim != spec.dim:
        raise DomainError(f"rows have {rows.dim} coordinates, copula has {spec.dim}")
    uniq, counts = rows.compressed()
    keys = np.packbits(uniq.atom, axis=1, bitorder="little")
    total = 0.0
    hits = 0
    patterns, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    for p in range(patterns.shape[0]):
        sel = inverse == p
        A = tuple(np.nonzero(uniq.atom[sel][0])[0])
        k = _k_values(spec, uniq.u[sel], uniq.u_minus[sel], A)
        w = counts[sel]
        good = np.isfinite(k) & (k > 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.where(good, np.log(np.where(good, k, 1.0)), penalty)
        total += float(np.dot(w, logs))
        hits += int(w[~good].sum())
    return LoglikValue(total / rows.n, hits)


def informed_loglik(spec: CopulaSpec, rows: PseudoRows, penalty=DEFAULT_PENALTY, full=False):
    """Averaged pseudo log-likelihood with atom flags from declared atoms.

    With ``full=True`` a :class:`LoglikValue` carrying the penalty count is returned.
    """
    res = _loglik(spec, _as_rows(rows), penalty)
    return res if full else res.value


def noninformed_loglik(spec: CopulaSpec, rows: PseudoRows, penalty=DEFAULT_PENALTY, full=False):
    """Averaged pseudo log-likelihood with atom flags inferred from repeated values.

    The arithmetic is that of :func:`informed_loglik`; only the flags differ.
    """
    res = _loglik(spec, _as_rows(rows), penalty)
    return res if full else res.value


def naive_loglik(spec: CopulaSpec, rows: PseudoRows, penalty=DEFAULT_PENALTY, full=False):
    """(1/n) sum log c(U_i), ignoring ties.  Inconsistent under discrete margins;
    kept to demonstrate exactly that."""
    res = _loglik(spec, _as_rows(rows).as_continuous(), penalty)
    return res if full else res.value


def composite_loglik(spec: CopulaSpec, rows: PseudoRows, penalty=DEFAULT_PENALTY, full=False):
    """Sum over coordinate pairs of the bivariate pseudo log-likelihood.

    Each pair uses its own atom flags; the parameter is shared through the
    exchangeable bivariate margin, so only Archimedean families qualify for
    ``d > 2``.
    """
    rows = _as_rows(rows)
    if rows.dim == 2:
        return informed_loglik(spec, rows, penalty, full)
    if spec.family not in ARCHIMEDEAN:
        raise UnsupportedError(f"{spec.family.value} has no exchangeable d-variate form")
    pair_spec = bivariate_margin(spec)
    total = 0.0
    hits = 0
    for k, l in itertools.combinations(range(rows.dim), 2):
        res = _loglik(pair_spec, rows.columns((k, l)), penalty)
        total += res.value
        hits += res.penalty_hits
    res = LoglikValue(total, hits)
    return res if full else res.value


def loglik(spec: CopulaSpec, rows: PseudoRows, config: LikelihoodConfig = LikelihoodConfig(), full=False):
    """Dispatch on ``config.kind``."""
    if config.composite:
        return composite_loglik(spec, rows, config.penalty, full)
    if config.kind == "naive":
        return naive_loglik(spec, rows, config.penalty, full)
    return informed_loglik(spec, rows, config.penalty, full)
