"""Maximum pseudo-likelihood fitting.

The objective is maximised with Nelder-Mead in an unconstrained
reparameterisation of the parameter box (identity, log or scaled logit per
coordinate).  Starts are the Kendall-tau inversion of the sample tau plus
deterministic offsets.  Student copulas are profiled over a finite ``nu`` grid.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from . import copulas as cop
from .copulas import CopulaSpec, Family
from .copulas._base import Bound
from .errors import (
    ConfigurationError,
    DomainError,
    InvalidParameterError,
    NonConvergenceError,
    RangeError,
    TiecopError,
    UnsupportedError,
)
from .identifiability import q_count
from .likelihood import DEFAULT_PENALTY, LikelihoodConfig, loglik
from .margins import PseudoRows, fit_empirical, pseudo_observations


class TaintedFitWarning(UserWarning):
    """The optimum has rows whose likelihood term was not positive."""


@dataclass(frozen=True)
class FitOptions:
    """Optimizer settings.

    ``tol`` bounds the simplex diameter in the transformed space and
    ``ftol`` the objective spread.  ``student_nu_grid`` defaults to 1..50.
    """

    kind: str = "non_informed"
    max_iter: int = 2000
    tol: float = 1e-7
    ftol: float = 1e-10
    n_starts: int = 3
    jitter: float = 0.25
    seed: int = 0
    student_nu_grid: tuple | None = None
    penalty: float = DEFAULT_PENALTY
    atom_scale: str = "n"
    waive_identifiability: bool = False

    def __post_init__(self):
        if not self.tol > 0 or not self.ftol > 0:
            raise ConfigurationError("tolerances must be positive")
        if self.n_starts < 1:
            raise ConfigurationError("n_starts must be >= 1")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be >= 1")
        LikelihoodConfig(self.kind, self.penalty)

    @property
    def likelihood(self) -> LikelihoodConfig:
        return LikelihoodConfig(self.kind, self.penalty)

    @property
    def nu_grid(self) -> tuple:
        if self.student_nu_grid is None:
            return cop.DEFAULT_NU_GRID
        return tuple(self.student_nu_grid)


@dataclass(frozen=True)
class StartTrace:
    start: tuple
    theta: tuple
    loglik: float
    converged: bool
    n_evals: int


@dataclass(frozen=True)
class FitResult:
    family: Family
    theta_hat: tuple
    loglik: float
    tau_hat: float
    converged: bool
    n_evals: int
    penalty_hits: int
    kind: str
    n: int
    dim: int = 2
    per_start: tuple = field(default=(), repr=False)

    @property
    def spec(self) -> CopulaSpec:
        return CopulaSpec(self.family, self.theta_hat, self.dim, None)

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "theta_hat": list(self.theta_hat),
            "loglik": self.loglik,
            "tau_hat": self.tau_hat,
            "converged": self.converged,
            "n_evals": self.n_evals,
            "penalty_hits": self.penalty_hits,
            "kind": self.kind,
            "n": self.n,
            "dim": self.dim,
        }


def sample_tau(rows: PseudoRows) -> float:
    """Average pairwise Kendall tau-b of the pseudo-observations."""
    taus = []
    for k in range(rows.dim):
        for l in range(k + 1, rows.dim):
            t = stats.kendalltau(rows.u[:, k], rows.u[:, l]).statistic
            taus.append(0.0 if not np.isfinite(t) else t)
    return float(np.mean(taus))


def _fit_bounds(family, dim):
    impl = cop.family_impl(family)
    if Family(family) is Family.FRANK and dim > 2:
        return (Bound(0.0, math.inf),)
    return impl.bounds


def _tau_start(family, tau_value, dim, aux=None):
    lo, hi = cop.family_impl(family).tau_range(dim)
    eps = 0.02
    t = min(max(tau_value, lo + eps), hi - eps)
    if Family(family) in (Family.FRANK, Family.PLACKETT) and abs(t) < 1e-3:
        t = 1e-3
    try:
        theta = cop.tau_inverse(family, t, aux)
    except RangeError:
        theta = cop.tau_inverse(family, 0.5 * (lo + hi) if math.isfinite(lo + hi) else 0.1, aux)
    return theta


def _optimize_free(objective, z0, options):
    """One Nelder-Mead run; returns (z, f, converged, nfev)."""
    z0 = np.atleast_1d(np.asarray(z0, dtype=float))
    simplex = np.vstack([z0] + [z0 + 0.25 * np.eye(z0.size)[i] for i in range(z0.size)])
    res = optimize.minimize(
        objective,
        z0,
        method="Nelder-Mead",
        options={
            "xatol": options.tol,
            "fatol": options.ftol,
            "maxiter": options.max_iter,
            "maxfev": 4 * options.max_iter,
            "initial_simplex": simplex,
        },
    )
    return res.x, float(res.fun), bool(res.success), int(res.nfev)


def _start_offsets(options):
    offs = [0.0]
    k = 1
    while len(offs) < options.n_starts:
        offs.append(k * options.jitter)
        if len(offs) < options.n_starts:
            offs.append(-k * options.jitter)
        k += 1
    return offs


def _fit_free_params(family, rows, dim, options, theta_start, fixed=()):
    """Optimise the free leading parameters with ``fixed`` trailing ones held constant."""
    bounds = _fit_bounds(family, dim)[: len(theta_start)]
    cfg = options.likelihood

    def theta_of(z):
        return tuple(b.from_free(zi) for b, zi in zip(bounds, np.atleast_1d(z))) + tuple(fixed)

    def objective(z):
        th = theta_of(z)
        try:
            spec = CopulaSpec(family, th, dim, None)
        except (InvalidParameterError, ValueError):
            return -options.penalty
        with np.errstate(all="ignore"):
            val = loglik(spec, rows, cfg, full=True)
        f = -val.value
        return f if math.isfinite(f) else -options.penalty

    z_base = np.array([b.to_free(t) for b, t in zip(bounds, theta_start)])
    traces = []
    for off in _start_offsets(options):
        z0 = z_base + off
        z, f, ok, nfev = _optimize_free(objective, z0, options)
        traces.append(StartTrace(theta_of(z0), theta_of(z), -f, ok, nfev))
    return traces


def _select(traces):
    ok = [t for t in traces if t.converged] or list(traces)
    best = max(ok, key=lambda t: (t.loglik, -float(np.linalg.norm(t.theta))))
    return best, any(t.converged for t in traces)


def fit_rows(family, rows: PseudoRows, options: FitOptions = FitOptions()) -> FitResult:
    """Maximise the configured pseudo log-likelihood for pre-built pseudo-observations.

    Raises
    ------
    NonConvergenceError
        No start converged; ``err.best`` holds the best-so-far :class:`FitResult`.
    """
    family = Family(family)
    dim = rows.dim
    if options.likelihood.composite is False and dim > 2 and family not in cop.ARCHIMEDEAN:
        raise UnsupportedError(f"{family.value} is bivariate only")
    t_hat = sample_tau(rows)
    if family is Family.STUDENT:
        traces = []
        for nu in options.nu_grid:
            start = _tau_start(family, t_hat, dim, aux=nu)
            traces.extend(_fit_free_params(family, rows, dim, options, start[:1], fixed=(float(nu),)))
    else:
        start = _tau_start(family, t_hat, dim)
        traces = _fit_free_params(family, rows, dim, options, start)
    best, converged = _select(traces)
    spec = CopulaSpec(family, best.theta, dim, None)
    val = loglik(spec, rows, options.likelihood, full=True)
    result = FitResult(
        family=family,
        theta_hat=best.theta,
        loglik=val.value,
        tau_hat=cop.tau(spec),
        converged=converged,
        n_evals=sum(t.n_evals for t in traces),
        penalty_hits=val.penalty_hits,
        kind=options.kind,
        n=rows.n,
        dim=dim,
        per_start=tuple(traces),
    )
    if not converged:
        raise NonConvergenceError(f"{family.value}: no start converged", best=result)
    if result.penalty_hits > 0:
        warnings.warn(
            f"{family.value} fit has {result.penalty_hits} non-positive likelihood terms at the optimum",
            TaintedFitWarning,
            stacklevel=2,
        )
    return result


def _normalise_atoms(atoms, d):
    if atoms is None:
        return [None] * d
    if isinstance(atoms, dict):
        out = [None] * d
        for k, v in atoms.items():
            out[int(k)] = list(v)
        return out
    atoms = list(atoms)
    if len(atoms) != d:
        raise ConfigurationError(f"need one atom declaration per column ({d}), got {len(atoms)}")
    return [None if a is None else list(a) for a in atoms]


def build_rows(data, atoms=None, kind="non_informed", atom_scale="n"):
    """Pseudo-observations and empirical margins of ``data`` under ``kind``."""
    x = np.asarray(data, dtype=float)
    if x.ndim != 2:
        raise DomainError("data must be an (n, d) matrix")
    cfg = LikelihoodConfig(kind)
    atom_lists = _normalise_atoms(atoms, x.shape[1])
    if cfg.mode == "informed":
        if all(a is None for a in atom_lists):
            raise ConfigurationError("informed likelihood needs atom declarations")
        atom_lists = [[] if a is None else a for a in atom_lists]
    margins = [fit_empirical(x[:, j], atom_lists[j]) for j in range(x.shape[1])]
    return pseudo_observations(x, margins, mode=cfg.mode, atom_scale=atom_scale), margins


def fit(family, data, atoms=None, options: FitOptions = FitOptions()) -> FitResult:
    """Fit a copula family to an ``(n, d)`` data matrix with empirical margins.

    Parameters
    ----------
    family : Family or str
    data : array-like, shape (n, d)
    atoms : list of value lists (one per column, ``None`` for none) or dict col -> values
        Declared atoms; required by the informed kinds.
    options : FitOptions

    Notes
    -----
    Before optimising, the parameter count is checked against the number of
    points the margins can distinguish (``q_n``); set
    ``options.waive_identifiability`` to skip the check.
    """
    family = Family(family)
    rows, margins = build_rows(data, atoms, options.kind, options.atom_scale)
    if not options.waive_identifiability:
        q = q_count([m.support.size for m in margins])
        p = 1 if family is Family.STUDENT and len(options.nu_grid) == 1 else cop.family_impl(family).n_params
        if p > q:
            raise ConfigurationError(
                f"{family.value} has {p} parameters but the margins only resolve q_n={q} points"
            )
    return fit_rows(family, rows, options)


def bernoulli_root(family, p1: float, p2: float, h00: float, aux=None) -> tuple:
    """Parameter solving C_theta(p1, p2) = h00 by bracketing root search.

    This is the maximiser of the informed likelihood for two Bernoulli
    margins, used as an independent check of :func:`fit`.
    """
    family = Family(family)
    bound = cop.family_impl(family).bounds[0]
    fixed = () if aux is None else (float(aux),)

    def g(z):
        spec = CopulaSpec(family, (bound.from_free(z),) + fixed, 2, None)
        return cop.cdf(spec, [p1, p2]) - h00

    lo, hi = -1.0, 1.0
    while g(lo) > 0:
        lo *= 2.0
        if lo < -60:
            raise RangeError(f"{family.value}: h00={h00} below the attainable range")
    while g(hi) < 0:
        hi *= 2.0
        if hi > 60:
            raise RangeError(f"{family.value}: h00={h00} above the attainable range")
    z = optimize.brentq(g, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=500)
    return (bound.from_free(z),) + fixed


# ---------------------------------------------------------------------------
# population-limit demonstration (two Bernoulli(1/2) margins, Clayton theta_0 = 2)


@dataclass(frozen=True)
class PopulationLimit:
    argmax_naive: float
    argmax_informed: float
    curve: np.ndarray = field(repr=False)

    def curve_csv(self) -> str:
        lines = ["theta,naive_limit,informed_limit"]
        for th, a, b in self.curve:
            lines.append(f"{th:.6g},{a:.6g},{b:.6g}")
        return "\n".join(lines) + "\n"


def _clayton_cdf(theta, p1, p2):
    return (p1**-theta + p2**-theta - 1.0) ** (-1.0 / theta)


def naive_population_limit(theta, p1=0.5, p2=0.5, theta0=2.0):
    """Almost-sure limit of the naive likelihood for Bernoulli margins and a Clayton model."""
    h00 = _clayton_cdf(theta0, p1, p2)
    c = _clayton_cdf(theta, p1, p2)
    return (
        math.log1p(theta)
        + theta * (p1 * math.log(p1) + p2 * math.log(p2))
        + h00 * (1.0 + 2.0 * theta) * (math.log(c) - math.log(p1 * p2))
    )


def informed_population_limit(theta, p1=0.5, p2=0.5, theta0=2.0):
    """Almost-sure limit of the informed likelihood (four-cell multinomial form)."""
    h00 = _clayton_cdf(theta0, p1, p2)
    h01 = p1 - h00
    h10 = p2 - h00
    h11 = 1.0 - p1 - p2 + h00
    c = _clayton_cdf(theta, p1, p2)
    return h00 * math.log(c) + h01 * math.log(p1 - c) + h10 * math.log(p2 - c) + h11 * math.log(1.0 - p1 - p2 + c)


def population_limit_demo(theta_max=20.0, n_grid=400) -> PopulationLimit:
    """Maximise both population limits over (0, theta_max] and tabulate the curves.

    With p1 = p2 = 1/2 and theta_0 = 2, the naive limit peaks near 4.9439
    while the informed limit peaks at 2.
    """
    opts = {"xatol": 1e-10}
    a = optimize.minimize_scalar(lambda t: -naive_population_limit(t), bounds=(1e-8, theta_max), method="bounded", options=opts)
    b = optimize.minimize_scalar(
        lambda t: -informed_population_limit(t), bounds=(1e-8, theta_max), method="bounded", options=opts
    )
    grid = np.linspace(theta_max / n_grid, theta_max, n_grid)
    curve = np.array([[t, naive_population_limit(t), informed_population_limit(t)] for t in grid])
    return PopulationLimit(float(a.x), float(b.x), curve)


# ---------------------------------------------------------------------------
# resampling standard errors


@dataclass(frozen=True)
class ResamplingSE:
    """Approximate standard deviations of theta_hat and tau_hat over row resamples."""

    theta_sd: tuple
    tau_sd: float
    n_resamples: int
    failures: int


def resampling_se(family, data, atoms=None, options: FitOptions = FitOptions(), n_resamples=100, seed=0) -> ResamplingSE:
    """Resample rows with replacement, refit, and report the spread.

    No theory backs this under ties; treat the output as a rough guide.
    """
    x = np.asarray(data, dtype=float)
    children = np.random.SeedSequence(seed).spawn(n_resamples)
    thetas, taus = [], []
    failures = 0
    for child in children:
        idx = np.random.default_rng(child).integers(0, x.shape[0], size=x.shape[0])
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", TaintedFitWarning)
                res = fit(family, x[idx], atoms, options)
        except TiecopError:
            failures += 1
            continue
        thetas.append(res.theta_hat)
        taus.append(res.tau_hat)
    if len(thetas) < 2:
        raise NonConvergenceError("fewer than two resampled fits succeeded")
    th = np.asarray(thetas)
    return ResamplingSE(tuple(th.std(axis=0, ddof=1)), float(np.std(taus, ddof=1)), n_resamples, failures)
