"""Monte Carlo harness: relative bias and RMSE of tau(C_theta_hat) in percent.

Five bivariate margin scenarios are built in:

- ``Exp1``: both margins N(0, 1);
- ``Exp2``: Poisson(5) and Poisson(10);
- ``Exp3``: Poisson(10) and N(0, 1);
- ``Exp4``: floor(1000 Z) with Z ~ N(0, 1), and N(0, 1);
- ``Exp5``: a zero-inflated half-normal with mass 0.05 at zero, and N(0, 1).

``Tri`` is a trivariate scenario with N(0, 1) margins, fitted with the
pairwise composite likelihood.
"""

import csv
import io
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from importlib import resources

import numpy as np
from scipy import special, stats

from . import copulas as cop
from .copulas import CopulaSpec, Family
from .errors import ConfigurationError, RangeError, TiecopError
from .estimation import FitOptions, TaintedFitWarning, build_rows, fit_rows

EXPERIMENTS = ("Exp1", "Exp2", "Exp3", "Exp4", "Exp5", "Tri")
TABLE_FAMILIES = (Family.CLAYTON, Family.FRANK, Family.GUMBEL, Family.GAUSSIAN, Family.STUDENT)
STUDENT_NU = 5
FAIL_FRACTION = 0.01


def thread_count(default=None) -> int:
    """Worker threads: ``TIECOP_THREADS`` if set, else ``default`` or the CPU count (at most 4)."""
    env = os.environ.get("TIECOP_THREADS")
    if env:
        try:
            k = int(env)
        except ValueError:
            raise ConfigurationError(f"TIECOP_THREADS must be an integer, got {env!r}") from None
        return max(k, 1)
    if default is not None:
        return max(int(default), 1)
    return max(min(os.cpu_count() or 1, 4), 1)


def _normal(u):
    return special.ndtri(u)


def _poisson(lam):
    return lambda u: stats.poisson.ppf(u, lam)


def _rounded_normal(u):
    return np.floor(1000.0 * special.ndtri(u))


def _zero_inflated(u):
    # F(x) = 0.05 + 0.95 (2 Phi(x) - 1) for x >= 0, F(0-) = 0
    u = np.asarray(u, dtype=float)
    with np.errstate(invalid="ignore"):
        x = special.ndtri((u - 0.05) / 1.9 + 0.5)
    return np.where(u < 0.05, 0.0, np.maximum(x, 0.0))


def make_margins(exp_id: str) -> tuple:
    """Quantile transforms F_j^{-1}, applied coordinatewise to copula samples."""
    table = {
        "Exp1": (_normal, _normal),
        "Exp2": (_poisson(5.0), _poisson(10.0)),
        "Exp3": (_poisson(10.0), _normal),
        "Exp4": (_rounded_normal, _normal),
        "Exp5": (_zero_inflated, _normal),
        "Tri": (_normal, _normal, _normal),
    }
    if exp_id not in table:
        raise ConfigurationError(f"unknown experiment {exp_id!r}; choose from {EXPERIMENTS}")
    return table[exp_id]


@dataclass(frozen=True)
class ExperimentSpec:
    exp_id: str
    family: Family
    tau0: float = 0.5
    n: int = 500
    reps: int = 200
    seed: int = 0
    kind: str = "non_informed"
    nu: int = STUDENT_NU

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.exp_id not in EXPERIMENTS:
            raise ConfigurationError(f"unknown experiment {self.exp_id!r}")
        if self.reps < 1:
            raise ConfigurationError("reps must be >= 1")
        if self.n < 2:
            raise ConfigurationError("n must be >= 2")
        self.theta0  # raises if tau0 is not attainable

    @property
    def dim(self) -> int:
        return 3 if self.exp_id == "Tri" else 2

    @property
    def theta0(self) -> tuple:
        lo, hi = cop.family_impl(self.family).tau_range(self.dim)
        if not lo <= self.tau0 < hi:
            raise RangeError(f"{self.family.value} cannot attain tau={self.tau0}")
        aux = self.nu if self.family is Family.STUDENT else None
        return cop.tau_inverse(self.family, self.tau0, aux)

    @property
    def copula(self) -> CopulaSpec:
        return CopulaSpec(self.family, self.theta0, self.dim, None)

    def seed_sequence(self) -> np.random.SeedSequence:
        key = [EXPERIMENTS.index(self.exp_id), list(Family).index(self.family), self.n]
        return np.random.SeedSequence(entropy=self.seed, spawn_key=key)


@dataclass(frozen=True)
class MCResult:
    spec: ExperimentSpec
    tau_hat: np.ndarray = field(repr=False)
    failures: int

    @property
    def rel_bias_pct(self) -> float:
        if self.tau_hat.size == 0:
            return math.nan
        if self.spec.tau0 == 0.0:
            return 100.0 * float(np.mean(self.tau_hat))
        return 100.0 * float(np.mean(self.tau_hat - self.spec.tau0)) / self.spec.tau0

    @property
    def rel_rmse_pct(self) -> float:
        if self.tau_hat.size == 0:
            return math.nan
        rmse = math.sqrt(float(np.mean((self.tau_hat - self.spec.tau0) ** 2)))
        return 100.0 * rmse / (self.spec.tau0 if self.spec.tau0 != 0.0 else 1.0)

    @property
    def valid(self) -> bool:
        return self.failures <= FAIL_FRACTION * self.spec.reps

    def row(self) -> dict:
        return {
            "family": self.spec.family.value,
            "exp": self.spec.exp_id,
            "n": self.spec.n,
            "reps": self.spec.reps,
            "failures": self.failures,
            "rel_bias_pct": self.rel_bias_pct,
            "rel_rmse_pct": self.rel_rmse_pct,
            "valid": self.valid,
        }


def generate(spec: ExperimentSpec, rng) -> np.ndarray:
    """One dataset of size ``spec.n`` for the scenario."""
    u = cop.sample(spec.copula, spec.n, rng)
    margins = make_margins(spec.exp_id)
    return np.column_stack([f(u[:, j]) for j, f in enumerate(margins)])


def _fit_options(spec, options):
    base = options or FitOptions(kind=spec.kind)
    nu_grid = (spec.nu,) if spec.family is Family.STUDENT else base.student_nu_grid
    return replace(base, kind=spec.kind, student_nu_grid=nu_grid, waive_identifiability=True)


def _one_rep(spec, options, seed_seq, atoms):
    rng = np.random.default_rng(seed_seq)
    x = generate(spec, rng)
    try:
        rows, _ = build_rows(x, atoms, options.kind, options.atom_scale)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TaintedFitWarning)
            res = fit_rows(spec.family, rows, options)
    except TiecopError:
        return None
    return res.tau_hat


def _informed_atoms(spec):
    # declared atoms: integer supports of the Poisson margins, zero for Exp5.
    # Exp4's rounded normal is left to the non-informed path.
    poisson = list(range(0, 200))
    table = {
        "Exp2": [poisson, poisson],
        "Exp3": [poisson, []],
        "Exp5": [[0.0], []],
    }
    return table.get(spec.exp_id, [[] for _ in range(spec.dim)])


def run_experiment(spec: ExperimentSpec, options: FitOptions | None = None, threads=None) -> MCResult:
    """Replicate generate-and-fit ``spec.reps`` times.

    Replication ``i`` draws from its own stream spawned from the spec's seed
    sequence, so results do not depend on the thread count.  Failed fits are
    excluded from the aggregates and counted.
    """
    opts = _fit_options(spec, options)
    atoms = _informed_atoms(spec) if opts.likelihood.mode == "informed" else None
    children = spec.seed_sequence().spawn(spec.reps)
    workers = thread_count(threads)
    if workers == 1:
        taus = [_one_rep(spec, opts, c, atoms) for c in children]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            taus = list(ex.map(lambda c: _one_rep(spec, opts, c, atoms), children))
    ok = np.array([t for t in taus if t is not None], dtype=float)
    return MCResult(spec, ok, sum(t is None for t in taus))


def tri_composite_experiment(n=500, reps=500, seed=0, family="clayton", tau0=0.5, options=None, threads=None) -> MCResult:
    """Exchangeable trivariate copula with N(0, 1) margins, fitted by pairwise composite likelihood."""
    spec = ExperimentSpec("Tri", family, tau0, n, reps, seed, "composite_non_informed")
    return run_experiment(spec, options, threads)


# ---------------------------------------------------------------------------
# configs, reference values and CSV output

CSV_FIELDS = ("family", "exp", "n", "reps", "failures", "rel_bias_pct", "rel_rmse_pct", "valid", "ref_bias_pct", "ref_rmse_pct")


def reference_table() -> dict:
    """Published bias/RMSE values keyed by (family, exp, n), for n in {100, 250, 500}."""
    text = resources.files("tiecop.data").joinpath("reference_tau_errors.csv").read_text()
    out = {}
    for rec in csv.DictReader(io.StringIO(text)):
        out[(rec["family"], rec["exp"], int(rec["n"]))] = (float(rec["rel_bias_pct"]), float(rec["rel_rmse_pct"]))
    return out


def table_specs(n=500, reps=200, seed=0, kind="non_informed", families=TABLE_FAMILIES, exps=EXPERIMENTS[:5]) -> list:
    return [ExperimentSpec(e, f, 0.5, n, reps, seed, kind) for f in families for e in exps]


def load_config(path_or_dict) -> list:
    """Experiment list from JSON.

    Either ``{"experiments": [{"exp_id": ..., "family": ..., ...}, ...]}`` or a
    grid ``{"families": [...], "exps": [...], "n": [...], "reps": R, "seed": S,
    "kind": K, "tau0": T}``.
    """
    if isinstance(path_or_dict, dict):
        cfg = path_or_dict
    else:
        with open(path_or_dict) as fh:
            cfg = json.load(fh)
    if "experiments" in cfg:
        return [ExperimentSpec(**e) for e in cfg["experiments"]]
    ns = cfg.get("n", 500)
    ns = ns if isinstance(ns, list) else [ns]
    out = []
    for n in ns:
        for f in cfg.get("families", [f.value for f in TABLE_FAMILIES]):
            for e in cfg.get("exps", list(EXPERIMENTS[:5])):
                out.append(
                    ExperimentSpec(
                        e, f, cfg.get("tau0", 0.5), int(n), int(cfg.get("reps", 200)), int(cfg.get("seed", 0)),
                        cfg.get("kind", "non_informed"),
                    )
                )
    return out


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "" if math.isnan(v) else f"{v:.6g}"
    return str(v)


def results_csv(results) -> str:
    """One row per (family, exp, n), with the published values alongside when known."""
    ref = reference_table()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in results:
        row = r.row()
        rb, rr = ref.get((row["family"], row["exp"], row["n"]), (math.nan, math.nan))
        row["ref_bias_pct"], row["ref_rmse_pct"] = rb, rr
        w.writerow([_fmt(row[k]) for k in CSV_FIELDS])
    return buf.getvalue()


def spec_dict(spec: ExperimentSpec) -> dict:
    d = asdict(spec)
    d["family"] = spec.family.value
    return d
