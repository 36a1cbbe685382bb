"""Drought analysis: SPI, drought runs, and duration-severity copula regression.

SPI is the Gaussian quantile of the rescaled empirical cdf of a trailing
moving average of daily precipitation.  A drought is a maximal run of
negative SPI, with duration D (days) and severity S = -sum SPI over the run.
Both are reported in months (divided by 30).  D is integer-valued and full of
ties, so the (D, S) copula is fitted with the non-informed likelihood.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from . import copulas as cop
from .copulas import CopulaSpec, Family
from .errors import DataError, ExtrapolationError, NonConvergenceError, TiecopError
from .estimation import FitOptions, FitResult, build_rows, fit_rows
from .margins import fit_empirical

DAYS_PER_MONTH = 30.0
DEFAULT_FAMILIES = (Family.CLAYTON, Family.FRANK, Family.GUMBEL, Family.GAUSSIAN)
MIN_EVENTS = 30


@dataclass(frozen=True)
class PrecipSeries:
    """Daily precipitation (mm) on strictly increasing dates."""

    dates: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        values = np.asarray(self.values, dtype=float)
        if dates.shape != values.shape or dates.ndim != 1:
            raise DataError("dates and values must be 1-d arrays of equal length")
        if values.size and (not np.all(np.isfinite(values)) or np.any(values < 0)):
            raise DataError("precipitation must be finite and non-negative")
        if np.any(np.diff(dates) <= np.timedelta64(0, "D")):
            raise DataError("dates must be strictly increasing")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class DroughtEvent:
    start: int
    duration_days: int
    severity: float

    @property
    def duration_months(self) -> float:
        return self.duration_days / DAYS_PER_MONTH

    @property
    def severity_months(self) -> float:
        return self.severity / DAYS_PER_MONTH


def moving_average(values, window_days=30) -> np.ndarray:
    """Trailing moving average; entry ``k`` covers days ``k .. k + window - 1``."""
    x = np.asarray(values, dtype=float)
    if window_days < 1:
        raise DataError("window_days must be >= 1")
    if x.size <= window_days:
        raise DataError(f"series of length {x.size} is not longer than the {window_days}-day window")
    c = np.concatenate([[0.0], np.cumsum(x)])
    return (c[window_days:] - c[:-window_days]) / window_days


def spi(series, window_days=30) -> np.ndarray:
    """Standardized precipitation index, one value per complete window.

    ``SPI_t = Phi^{-1}(F_n(MA_t))`` with ``F_n`` the ``1/(n+1)``-scaled
    empirical cdf of the moving averages, so values are always finite.
    The output is aligned with the window end dates ``dates[window_days-1:]``.
    """
    values = series.values if isinstance(series, PrecipSeries) else np.asarray(series, dtype=float)
    if values.size and (np.any(values < 0) or not np.all(np.isfinite(values))):
        raise DataError("precipitation must be finite and non-negative")
    ma = moving_average(values, window_days)
    top = float(np.max(ma))
    if not top > 0.0:
        raise DataError("every moving-average window is zero; SPI is degenerate")
    # cumulative sums leave rounding residue, so equal windows can differ in
    # the last bits; snap to a relative grid so ties (and units) do not matter
    ma = np.round(ma / top, 10)
    margin = fit_empirical(ma)
    return special.ndtri(margin.eval(ma))


def extract_droughts(spi_values) -> list:
    """Maximal runs of negative SPI as :class:`DroughtEvent` (duration, -sum SPI)."""
    s = np.asarray(spi_values, dtype=float)
    neg = s < 0
    events = []
    i = 0
    n = s.size
    while i < n:
        if neg[i]:
            j = i
            while j < n and neg[j]:
                j += 1
            events.append(DroughtEvent(i, j - i, float(-s[i:j].sum())))
            i = j
        else:
            i += 1
    return events


def events_matrix(events) -> np.ndarray:
    """``(n, 2)`` array of (duration_months, severity_months)."""
    return np.array([[e.duration_months, e.severity_months] for e in events], dtype=float).reshape(-1, 2)


# ---------------------------------------------------------------------------
# copula regression


@dataclass(frozen=True)
class DurationSeverityMargins:
    """Empirical duration cdf and piecewise-linear severity cdf.

    The severity cdf interpolates ``i / (n + 1)`` between the order
    statistics; it is undefined outside ``[min S, max S]``.  The duration cdf
    is the plain ``count / n`` empirical cdf, so it reaches one at the largest
    observed duration.
    """

    durations: np.ndarray
    severities: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = np.unique(np.asarray(self.durations, dtype=float))
        object.__setattr__(self, "_dur_margin", fit_empirical(self.durations))
        object.__setattr__(self, "severities", np.sort(np.asarray(self.severities, dtype=float)))
        object.__setattr__(self, "durations", d)

    @property
    def support(self) -> np.ndarray:
        return self.durations

    def duration_cdf(self, y):
        m = self._dur_margin
        return m._count_le(np.asarray(y, dtype=float)) / m.n

    def severity_cdf(self, s):
        s = np.asarray(s, dtype=float)
        xs = self.severities
        if np.any(s < xs[0]) or np.any(s > xs[-1]):
            raise ExtrapolationError(f"severity outside the observed range [{xs[0]:.6g}, {xs[-1]:.6g}]")
        n = xs.size
        levels = np.arange(1, n + 1) / (n + 1)
        # average the levels of tied order statistics so the interpolant is a function
        uniq, inv = np.unique(xs, return_inverse=True)
        lv = np.bincount(inv, weights=levels) / np.bincount(inv)
        if uniq.size == 1:
            return np.full(s.shape, lv[0])
        return np.interp(s, uniq, lv)


@dataclass(frozen=True)
class RankedFit:
    family: Family
    result: FitResult | None
    loglik_per_obs: float
    error: str = ""


def fit_duration_severity(events, families=DEFAULT_FAMILIES, min_events=MIN_EVENTS, options: FitOptions | None = None):
    """Fit each candidate family to (duration, severity) and rank by pseudo log-likelihood per observation.

    Parameters
    ----------
    events : list of DroughtEvent or (n, 2) array of (duration, severity)
    families : iterable of Family or str
    min_events : int
        Refuse to fit below this many events.
    options : FitOptions, optional
        Defaults to the non-informed likelihood.

    Returns
    -------
    (ranked, margins)
        ``ranked`` is a list of :class:`RankedFit`, best first; failed
        families come last with ``result=None``.
    """
    data = events_matrix(events) if not isinstance(events, np.ndarray) else np.asarray(events, dtype=float)
    if data.shape[0] < min_events:
        raise DataError(f"{data.shape[0]} events is below the floor of {min_events}")
    opts = options or FitOptions(kind="non_informed")
    rows, _ = build_rows(data, None, opts.kind, opts.atom_scale)
    ranked = []
    for fam in families:
        fam = Family(fam)
        try:
            res = fit_rows(fam, rows, opts)
            ranked.append(RankedFit(fam, res, res.loglik))
        except NonConvergenceError as err:
            best = err.best
            ranked.append(RankedFit(fam, None, -math.inf, str(err)) if best is None else RankedFit(fam, best, best.loglik, str(err)))
        except TiecopError as err:
            ranked.append(RankedFit(fam, None, -math.inf, str(err)))
    if all(r.result is None for r in ranked):
        raise NonConvergenceError("every candidate family failed")
    ranked.sort(key=lambda r: -r.loglik_per_obs)
    margins = DurationSeverityMargins(data[:, 0], data[:, 1])
    return ranked, margins


def _spec_of(fit):
    if isinstance(fit, RankedFit):
        fit = fit.result
    if isinstance(fit, FitResult):
        return fit.spec
    return fit


def conditional_duration(fit, margins: DurationSeverityMargins, s, y):
    """P(D <= y | S = s) = d/du C(F_D(y), u) at u = smoothed F_S(s)."""
    spec = _spec_of(fit)
    u = float(margins.severity_cdf(s))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    v = margins.duration_cdf(y)
    pts = np.column_stack([v, np.full(v.shape, u)])
    vals = np.clip(cop.partial_cdf(spec, pts, B=(1,)), 0.0, 1.0)
    # the conditional cdf is exactly 0 / 1 at v = 0 / 1
    vals = np.where(v <= 0.0, 0.0, np.where(v >= 1.0, 1.0, vals))
    return np.maximum.accumulate(vals) if np.all(np.diff(y) >= 0) else vals


def conditional_mean_duration(fit, margins: DurationSeverityMargins, s) -> float:
    """E(D | S = s) over the observed duration support."""
    ys = margins.support
    p = conditional_duration(fit, margins, s, ys)
    w = np.diff(np.concatenate([[0.0], p]))
    return float(np.dot(ys, w))


def conditional_curves(fit, margins, s_values, y_values):
    """Rows (s, y, P(D <= y | S = s)) and (s, E[D | S = s])."""
    probs, means = [], []
    for s in s_values:
        p = conditional_duration(fit, margins, s, y_values)
        probs.extend((float(s), float(y), float(q)) for y, q in zip(y_values, p))
        means.append((float(s), conditional_mean_duration(fit, margins, s)))
    return probs, means


# ---------------------------------------------------------------------------
# synthetic data and CSV I/O


def synthetic_events(n, tau=0.5, family="frank", seed=None, mean_days=15.0, severity_shape=2.0, severity_scale=6.0):
    """(duration_months, severity_months) pairs with a known copula.

    Durations are ``1 + Geometric`` days with the given mean (integer, many
    ties); severities are Gamma(shape, scale) in SPI-days.
    """
    spec = CopulaSpec(family, cop.tau_inverse(family, tau), 2)
    u = cop.sample(spec, n, seed)
    p = 1.0 / mean_days
    d = stats.geom.ppf(u[:, 0], p)
    s = stats.gamma.ppf(u[:, 1], severity_shape, scale=severity_scale)
    return np.column_stack([d / DAYS_PER_MONTH, s / DAYS_PER_MONTH])


def synthetic_precip(n_days, seed=None, start="2000-01-01", wet_prob=0.35, persistence=0.6):
    """Daily precipitation with wet/dry persistence and gamma amounts."""
    rng = np.random.default_rng(seed)
    wet = np.empty(n_days, dtype=bool)
    wet[0] = rng.uniform() < wet_prob
    stay_wet = wet_prob + persistence * (1.0 - wet_prob)
    get_wet = wet_prob * (1.0 - persistence)
    draws = rng.uniform(size=n_days)
    for t in range(1, n_days):
        wet[t] = draws[t] < (stay_wet if wet[t - 1] else get_wet)
    amounts = np.round(rng.gamma(0.8, 12.0, size=n_days), 1)
    values = np.where(wet, amounts, 0.0)
    dates = np.datetime64(start) + np.arange(n_days)
    return PrecipSeries(dates, values)


def read_precip_csv(path_or_text) -> PrecipSeries:
    """CSV with a header and columns ``date`` (ISO-8601) and ``precip_mm``."""
    if isinstance(path_or_text, str) and "\n" in path_or_text:
        fh = io.StringIO(path_or_text)
    else:
        fh = open(path_or_text, newline="")
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"date", "precip_mm"} <= set(reader.fieldnames):
            raise DataError("precipitation CSV needs a header with 'date' and 'precip_mm'")
        dates, values = [], []
        for line, rec in enumerate(reader, start=2):
            try:
                dates.append(np.datetime64(rec["date"].strip(), "D"))
                values.append(float(rec["precip_mm"]))
            except (ValueError, AttributeError) as err:
                raise DataError(f"line {line}: cannot parse {rec!r}: {err}") from None
    return PrecipSeries(np.array(dates, dtype="datetime64[D]"), np.array(values))


def events_csv(events) -> str:
    lines = ["duration_months,severity_months"]
    for e in events:
        lines.append(f"{e.duration_months:.6g},{e.severity_months:.6g}")
    return "\n".join(lines) + "\n"
