import json

import numpy as np
import pytest
from scipy import special, stats

from tiecop import copulas as cop
from tiecop.copulas import Family
from tiecop.errors import ConfigurationError, RangeError
from tiecop.simulation import (
    CSV_FIELDS,
    ExperimentSpec,
    MCResult,
    generate,
    load_config,
    make_margins,
    reference_table,
    results_csv,
    run_experiment,
    table_specs,
    thread_count,
    tri_composite_experiment,
)


def test_margin_examples():
    f1, _ = make_margins("Exp5")
    assert f1(np.array([0.03]))[0] == 0.0
    assert f1(np.array([0.525]))[0] == pytest.approx(special.ndtri(0.75), rel=1e-14)
    g1, g2 = make_margins("Exp2")
    assert g1(np.array([0.5]))[0] == 5
    assert g2(np.array([0.5]))[0] == stats.poisson.ppf(0.5, 10)
    h1, _ = make_margins("Exp4")
    assert h1(np.array([0.975]))[0] == np.floor(1000 * special.ndtri(0.975))
    assert len(make_margins("Tri")) == 3
    with pytest.raises(ConfigurationError):
        make_margins("Exp9")


def test_exp5_atom_mass():
    f1, _ = make_margins("Exp5")
    u = np.random.default_rng(0).uniform(size=200_000)
    x = f1(u)
    assert np.mean(x == 0.0) == pytest.approx(0.05, abs=0.002)
    # the continuous part follows F(x) = 0.05 + 0.95 (2 Phi(x) - 1)
    for q in (0.5, 1.0, 2.0):
        assert np.mean(x <= q) == pytest.approx(0.05 + 0.95 * (2 * special.ndtr(q) - 1), abs=0.003)


@pytest.mark.parametrize("exp_id", ["Exp1", "Exp2", "Exp3", "Exp4", "Exp5"])
def test_generate_pushes_copula_draws_through_margins(exp_id):
    spec = ExperimentSpec(exp_id, "clayton", n=3000)
    x = generate(spec, np.random.default_rng(1))
    u = cop.sample(spec.copula, spec.n, np.random.default_rng(1))
    ref = np.column_stack([f(u[:, j]) for j, f in enumerate(make_margins(exp_id))])
    np.testing.assert_array_equal(x, ref)
    assert stats.kendalltau(u[:, 0], u[:, 1]).statistic == pytest.approx(0.5, abs=0.03)


def test_single_rep_rmse_equals_abs_bias():
    res = run_experiment(ExperimentSpec("Exp3", "frank", n=100, reps=1, seed=3))
    assert res.rel_rmse_pct == pytest.approx(abs(res.rel_bias_pct), rel=1e-12)


def test_determinism_and_thread_independence():
    spec = ExperimentSpec("Exp2", "gumbel", n=80, reps=6, seed=5)
    a = run_experiment(spec, threads=1)
    b = run_experiment(spec, threads=3)
    np.testing.assert_array_equal(a.tau_hat, b.tau_hat)
    np.testing.assert_array_equal(a.tau_hat, run_experiment(spec, threads=1).tau_hat)
    other = run_experiment(ExperimentSpec("Exp2", "gumbel", n=80, reps=6, seed=6), threads=1)
    assert not np.array_equal(a.tau_hat, other.tau_hat)


def test_informed_run_uses_declared_atoms():
    res = run_experiment(ExperimentSpec("Exp2", "clayton", n=100, reps=3, kind="informed"))
    assert res.failures == 0 and res.tau_hat.size == 3


def test_tri_independence_frank():
    res = tri_composite_experiment(n=500, reps=3, seed=2, family="frank", tau0=0.0)
    assert res.failures == 0
    assert np.all(np.abs(res.tau_hat) < 0.05)
    again = tri_composite_experiment(n=500, reps=3, seed=2, family="frank", tau0=0.0)
    np.testing.assert_array_equal(res.tau_hat, again.tau_hat)


def test_rmse_dominates_bias():
    spec = ExperimentSpec("Exp1", "clayton", reps=5)
    rng = np.random.default_rng(0)
    for _ in range(20):
        r = MCResult(spec, rng.uniform(0.3, 0.7, size=5), 0)
        assert r.rel_rmse_pct >= abs(r.rel_bias_pct)


def test_failure_threshold_marks_invalid():
    spec = ExperimentSpec("Exp1", "clayton", reps=100)
    assert MCResult(spec, np.full(99, 0.5), 1).valid
    assert not MCResult(spec, np.full(98, 0.5), 2).valid


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        ExperimentSpec("Exp1", "clayton", reps=0)
    with pytest.raises(RangeError):
        ExperimentSpec("Exp1", "clayton", tau0=-0.3)
    s = ExperimentSpec("Exp1", "student")
    assert s.theta0[1] == 5
    assert ExperimentSpec("Tri", "clayton").dim == 3


def test_reference_table_values():
    ref = reference_table()
    assert len(ref) == 75
    assert ref[("clayton", "Exp1", 500)] == (0.08, 4.44)
    assert ref[("frank", "Exp2", 250)] == (-0.0, 5.92)


def test_config_and_csv(tmp_path):
    cfg = {"families": ["clayton", "frank"], "exps": ["Exp1"], "n": [100, 250], "reps": 2, "seed": 1}
    specs = load_config(cfg)
    assert len(specs) == 4 and specs[0].n == 100 and specs[0].family is Family.CLAYTON
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"experiments": [{"exp_id": "Exp3", "family": "gumbel", "n": 60, "reps": 2}]}))
    (spec,) = load_config(path)
    assert spec.exp_id == "Exp3" and spec.n == 60
    text = results_csv([run_experiment(spec)])
    lines = text.strip().split("\n")
    assert lines[0] == ",".join(CSV_FIELDS)
    assert lines[1].startswith("gumbel,Exp3,60,2,0,")
    assert len(table_specs()) == 25


def test_thread_count(monkeypatch):
    monkeypatch.setenv("TIECOP_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("TIECOP_THREADS", "x")
    with pytest.raises(ConfigurationError):
        thread_count()
    monkeypatch.delenv("TIECOP_THREADS")
    assert 1 <= thread_count() <= 4
    assert thread_count(2) == 2
