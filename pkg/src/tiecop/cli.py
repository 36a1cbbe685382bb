"""Command-line interface.

Exit codes: 0 success, 1 input or configuration error, 2 fit tainted by
non-positive likelihood terms, 3 optimizer non-convergence.  Numbers are
written with 6 significant digits.
"""

import argparse
import csv
import io
import json
import math
import sys
import warnings

import numpy as np

from . import hydro, identifiability, simulation
from .copulas import DEFAULT_NU_GRID, Family, family_impl
from .errors import ConfigurationError, DataError, NonConvergenceError, TiecopError
from .estimation import FitOptions, TaintedFitWarning, fit, population_limit_demo
from .identifiability import q_count
from .margins import fit_empirical

EXIT_OK, EXIT_INPUT, EXIT_TAINTED, EXIT_NONCONVERGED = 0, 1, 2, 3

DEFAULT_BOXES = {
    Family.CLAYTON: [(0.5, 10.0)],
    Family.FRANK: [(0.5, 20.0)],
    Family.GUMBEL: [(1.05, 6.0)],
    Family.PLACKETT: [(0.2, 20.0)],
    Family.GAUSSIAN: [(-0.9, 0.9)],
    Family.STUDENT: [(-0.5, 0.5), (2.0, 6.0)],
}
DEFAULT_DELTAS = {Family.STUDENT: 1.0}


def _sig(v):
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return str(v)
        return float(f"{v:.6g}")
    if isinstance(v, dict):
        return {k: _sig(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_sig(x) for x in v]
    return v


def _num(v):
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def _emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _json(obj) -> str:
    return json.dumps(_sig(obj), indent=2, sort_keys=True) + "\n"


def read_numeric_csv(path, columns=None):
    """Header-required numeric CSV; returns (names, (n, d) array)."""
    try:
        fh = open(path, newline="")
    except OSError as err:
        raise DataError(f"cannot open {path}: {err}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise DataError(f"{path}: empty file, a header row is required")
        header = [h.strip() for h in header]
        rows = []
        for line, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise DataError(f"{path}:{line}: expected {len(header)} fields, got {len(rec)}")
            vals = []
            for col, cell in enumerate(rec, start=1):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataError(f"{path}:{line}:{col}: not a number: {cell!r}") from None
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    data = np.array(rows)
    if columns:
        missing = [c for c in columns if c not in header]
        if missing:
            raise DataError(f"{path}: unknown column(s) {missing}")
        idx = [header.index(c) for c in columns]
        return [header[i] for i in idx], data[:, idx]
    return header, data


def parse_atoms(specs, sidecar, names):
    """``col=v1,v2`` items and/or a JSON sidecar ``{"col": [v, ...]}`` -> list per column."""
    out = {}
    if sidecar:
        try:
            with open(sidecar) as fh:
                side = json.load(fh)
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigurationError(f"cannot read atom sidecar {sidecar}: {err}") from None
        out.update({str(k): [float(x) for x in v] for k, v in side.items()})
    for item in specs or []:
        if "=" not in item:
            raise ConfigurationError(f"atom declaration {item!r} must look like col=v1,v2")
        col, vals = item.split("=", 1)
        try:
            out[col.strip()] = [float(x) for x in vals.split(",") if x.strip()]
        except ValueError:
            raise ConfigurationError(f"atom values in {item!r} must be numbers") from None
    if not out:
        return None
    unknown = [c for c in out if c not in names]
    if unknown:
        raise ConfigurationError(f"atoms declared for unknown column(s) {unknown}")
    return [out.get(n) for n in names]


def parse_nu_grid(text):
    if text is None:
        return DEFAULT_NU_GRID
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return tuple(range(int(lo), int(hi) + 1))
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise ConfigurationError(f"--nu-grid must be 'a..b' or a comma list of integers, got {text!r}") from None


def _kind(mode, d):
    mode = mode.replace("-", "_")
    if d > 2 and mode in ("informed", "non_informed"):
        return "composite_" + mode
    return mode


# ---------------------------------------------------------------------------
# commands


def cmd_fit(args):
    names, data = read_numeric_csv(args.input, args.columns.split(",") if args.columns else None)
    kind = _kind(args.mode, data.shape[1])
    atoms = parse_atoms(args.atoms, args.atoms_file, names)
    if kind in ("informed", "composite_informed") and atoms is None:
        raise ConfigurationError("informed mode requires --atoms or --atoms-file")
    family = Family(args.family)
    nu_grid = parse_nu_grid(args.nu_grid)
    opts = FitOptions(
        kind=kind,
        n_starts=args.n_starts,
        seed=args.seed,
        max_iter=args.max_iter,
        student_nu_grid=nu_grid,
        waive_identifiability=args.no_ident_check,
    )
    q = q_count([fit_empirical(data[:, j]).support.size for j in range(data.shape[1])])
    p = 1 if family is Family.STUDENT and len(nu_grid) == 1 else family_impl(family).n_params
    config = {
        "command": "fit",
        "input": args.input,
        "family": family.value,
        "kind": kind,
        "atoms": atoms,
        "seed": args.seed,
        "n_starts": args.n_starts,
        "nu_grid": [nu_grid[0], nu_grid[-1], len(nu_grid)] if family is Family.STUDENT else None,
    }
    code = EXIT_OK
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", TaintedFitWarning)
        try:
            res = fit(family, data, atoms, opts)
        except NonConvergenceError as err:
            if err.best is None:
                raise
            res, code = err.best, EXIT_NONCONVERGED
    if code == EXIT_OK and (res.penalty_hits > 0 or any(issubclass(w.category, TaintedFitWarning) for w in caught)):
        code = EXIT_TAINTED
    out = res.to_dict()
    out["identifiability"] = {"q_n": q, "p": p, "passed": p <= q, "waived": args.no_ident_check}
    out["config"] = config
    if args.format == "json":
        text = _json(out)
    else:
        flat = {k: v for k, v in out.items() if k not in ("config", "identifiability")}
        flat["theta_hat"] = ";".join(_num(float(t)) for t in res.theta_hat)
        flat["q_n"] = q
        text = "key,value\n" + "".join(f"{k},{_num(v) if not isinstance(v, bool) else str(v).lower()}\n" for k, v in flat.items())
    _emit(text, args.output)
    return code


def _bernoulli_grid():
    return identifiability.build_grid([np.array([0.5, 1.0]), np.array([0.5, 1.0])])


def _parse_box(items, family):
    if not items:
        return DEFAULT_BOXES[family]
    box = []
    for item in items:
        try:
            lo, hi = item.split(":")
            box.append((float(lo), float(hi)))
        except ValueError:
            raise ConfigurationError(f"--box entries look like lo:hi, got {item!r}") from None
    return box


def cmd_identify(args):
    family = Family(args.family)
    if args.bernoulli_margins:
        grid = _bernoulli_grid()
        source = "bernoulli"
    else:
        if not args.input:
            raise ConfigurationError("identify needs an input CSV or --bernoulli-margins")
        names, data = read_numeric_csv(args.input, args.columns.split(",") if args.columns else None)
        margins = [fit_empirical(data[:, j]) for j in range(data.shape[1])]
        grid = identifiability.build_grid(margins, cap=args.cap, max_levels=args.max_levels)
        source = args.input
    box = _parse_box(args.box, family)
    delta = args.delta if args.delta is not None else DEFAULT_DELTAS.get(family, 0.1)
    report = identifiability.rank_scan(family, grid, box, delta, rank_tol=args.rank_tol)
    out = report.to_dict()
    out["grid_levels"] = list(grid.m)
    out["thinned_columns"] = list(grid.capped)
    out["config"] = {"command": "identify", "family": family.value, "source": source, "rank_tol": args.rank_tol}
    _emit(_json(out), args.output)
    return EXIT_OK


def cmd_simulate(args):
    if args.config:
        specs = simulation.load_config(args.config)
    elif args.tri:
        specs = [simulation.ExperimentSpec("Tri", f, args.tau0, args.n, args.reps, args.seed, "composite_non_informed") for f in args.families.split(",")]
    else:
        exps = args.exps.split(",") if args.exps else list(simulation.EXPERIMENTS[:5])
        fams = args.families.split(",") if args.families else [f.value for f in simulation.TABLE_FAMILIES]
        specs = [simulation.ExperimentSpec(e, f, args.tau0, args.n, args.reps, args.seed, args.kind) for f in fams for e in exps]
    results = [simulation.run_experiment(s, threads=args.threads) for s in specs]
    header = "# " + json.dumps({"command": "simulate", "experiments": len(specs), "seed": specs[0].seed if specs else None}, sort_keys=True) + "\n"
    _emit(header + simulation.results_csv(results), args.output)
    return EXIT_OK if all(r.valid for r in results) else EXIT_NONCONVERGED


def _spi_series(args):
    series = hydro.read_precip_csv(args.input)
    return series, hydro.spi(series, args.window)


def cmd_spi(args):
    series, values = _spi_series(args)
    dates = series.dates[args.window - 1 :]
    buf = io.StringIO()
    buf.write("date,spi\n")
    for d, v in zip(dates, values):
        buf.write(f"{d},{v:.6g}\n")
    _emit(buf.getvalue(), args.output)
    return EXIT_OK


def cmd_drought(args):
    _, values = _spi_series(args)
    events = hydro.extract_droughts(values)
    _emit(hydro.events_csv(events), args.output)
    return EXIT_OK


def _grid_arg(text, default):
    if text is None:
        return default
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigurationError(f"expected a comma list of numbers, got {text!r}") from None


def cmd_regress(args):
    names, data = read_numeric_csv(args.input, ["duration_months", "severity_months"])
    fams = [Family(f) for f in args.families.split(",")]
    ranked, margins = hydro.fit_duration_severity(data, fams, min_events=args.min_events)
    best = ranked[0]
    sev = margins.severities
    s_grid = _grid_arg(args.s_grid, list(np.quantile(sev, [0.1, 0.25, 0.5, 0.75, 0.9])))
    y_grid = _grid_arg(args.y_grid, [float(y) for y in range(1, 9)])
    probs, means = hydro.conditional_curves(best, margins, s_grid, y_grid)
    summary = {
        "ranking": [
            {"family": r.family.value, "loglik_per_obs": r.loglik_per_obs if math.isfinite(r.loglik_per_obs) else None,
             "theta_hat": list(r.result.theta_hat) if r.result else None,
             "tau_hat": r.result.tau_hat if r.result else None, "error": r.error}
            for r in ranked
        ],
        "chosen": best.family.value,
        "n_events": int(data.shape[0]),
        "config": {"command": "regress", "input": args.input, "families": [f.value for f in fams]},
    }
    prefix = args.output_prefix
    curve = "s,y,prob\n" + "".join(f"{s:.6g},{y:.6g},{p:.6g}\n" for s, y, p in probs)
    mean = "s,mean_duration\n" + "".join(f"{s:.6g},{m:.6g}\n" for s, m in means)
    if prefix:
        _emit(curve, prefix + "_conditional.csv")
        _emit(mean, prefix + "_mean.csv")
        _emit(_json(summary), prefix + "_fit.json")
    else:
        _emit(_json(summary) + curve + mean, None)
    return EXIT_OK


def cmd_demo_bernoulli(args):
    res = population_limit_demo()
    out = {"argmax_naive_limit": res.argmax_naive, "argmax_informed_limit": res.argmax_informed,
           "scenario": {"family": "clayton", "theta0": 2.0, "p1": 0.5, "p2": 0.5, "h00": 1.0 / math.sqrt(7.0)}}
    if args.curve_csv:
        _emit(res.curve_csv(), args.curve_csv)
    _emit(_json(out), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="tiecop", description="Copula estimation with ties, identifiability audits and drought regression.")
    sub = p.add_subparsers(dest="command", required=True)
    families = [f.value for f in Family]

    f = sub.add_parser("fit", help="fit a copula family to a CSV of observations")
    f.add_argument("input")
    f.add_argument("--family", required=True, choices=families)
    f.add_argument("--mode", default="non-informed", choices=["informed", "non-informed", "naive", "composite-informed", "composite-non-informed"])
    f.add_argument("--atoms", action="append", metavar="COL=V1,V2", help="declared atoms for a column (repeatable)")
    f.add_argument("--atoms-file", help="JSON sidecar {column: [values]}")
    f.add_argument("--columns", help="comma list of columns to use")
    f.add_argument("--nu-grid", help="Student degrees of freedom, 'a..b' or comma list (default 1..50)")
    f.add_argument("--n-starts", type=int, default=3)
    f.add_argument("--max-iter", type=int, default=2000)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--no-ident-check", action="store_true", help="skip the p <= q_n pre-check")
    f.add_argument("--format", choices=["json", "csv"], default="json")
    f.add_argument("--output", "-o")
    f.set_defaults(func=cmd_fit)

    i = sub.add_parser("identify", help="Jacobian-rank identifiability audit")
    i.add_argument("input", nargs="?")
    i.add_argument("--family", required=True, choices=families)
    i.add_argument("--bernoulli-margins", action="store_true", help="use two Bernoulli(1/2) margins instead of data")
    i.add_argument("--columns")
    i.add_argument("--box", action="append", metavar="LO:HI", help="parameter interval, one per parameter")
    i.add_argument("--delta", type=float)
    i.add_argument("--rank-tol", type=float, default=identifiability.DEFAULT_RANK_TOL)
    i.add_argument("--max-levels", type=int, default=identifiability.DEFAULT_LEVELS)
    i.add_argument("--cap", type=int, default=identifiability.DEFAULT_CAP)
    i.add_argument("--output", "-o")
    i.set_defaults(func=cmd_identify)

    s = sub.add_parser("simulate", help="Monte Carlo bias/RMSE of tau")
    s.add_argument("--config", help="JSON experiment config")
    s.add_argument("--table1", action="store_true", help="all five families and Exp1-Exp5 (the default grid)")
    s.add_argument("--tri", action="store_true", help="trivariate composite scenario")
    s.add_argument("--families")
    s.add_argument("--exps")
    s.add_argument("--n", type=int, default=500)
    s.add_argument("--reps", type=int, default=200)
    s.add_argument("--tau0", type=float, default=0.5)
    s.add_argument("--kind", default="non_informed")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threads", type=int, help="worker threads (default TIECOP_THREADS or CPU count)")
    s.add_argument("--output", "-o")
    s.set_defaults(func=cmd_simulate)

    for name, func, help_ in (("spi", cmd_spi, "standardized precipitation index"), ("drought", cmd_drought, "drought events from precipitation")):
        q = sub.add_parser(name, help=help_)
        q.add_argument("input", help="CSV with columns date, precip_mm")
        q.add_argument("--window", type=int, default=30)
        q.add_argument("--output", "-o")
        q.set_defaults(func=func)

    r = sub.add_parser("regress", help="duration-severity copula fit and conditional curves")
    r.add_argument("input", help="events CSV with duration_months, severity_months")
    r.add_argument("--families", default="clayton,frank,gumbel,gaussian")
    r.add_argument("--s-grid", help="severity values (months), comma list")
    r.add_argument("--y-grid", help="duration thresholds (months), default 1..8")
    r.add_argument("--min-events", type=int, default=hydro.MIN_EVENTS)
    r.add_argument("--output-prefix")
    r.set_defaults(func=cmd_regress)

    d = sub.add_parser("demo-bernoulli", help="population limits of the naive and informed likelihoods")
    d.add_argument("--curve-csv", help="write the two curves for plotting")
    d.add_argument("--output", "-o")
    d.set_defaults(func=cmd_demo_bernoulli)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "simulate" and args.tri and not args.families:
        args.families = "clayton"
    try:
        return args.func(args)
    except NonConvergenceError as err:
        print(f"tiecop: {err}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (TiecopError, ValueError, OSError) as err:
        print(f"tiecop: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
