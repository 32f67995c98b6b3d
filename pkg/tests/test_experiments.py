import json
import math

import numpy as np
import pytest
from scipy import integrate

from rankhire.errors import WrongRegimeError
from rankhire.experiments import (
    EXPERIMENTS,
    PERCENTILE_TABLE,
    ExperimentSpec,
    TestReport,
    best_of_moments,
    fixed_threshold_check,
    median_gap_cdf,
    percentile_table_rows,
    report_bundle,
    run_experiment,
    trend_statistic,
)

ALL = {
    "median_rayleigh", "percentile_moment_table", "records_clt", "best_of_r_clt", "sqrtm_clt",
    "tnsmall_check", "tle_offsets", "tle_fraction", "gap_exponential", "gap_scaled_law",
    "conditional_first_value", "oracle_equivalence", "sampler_equivalence",
    "as_convergence_probe", "early_independence_probe",
}


def test_registry_complete():
    assert set(EXPERIMENTS) == ALL
    for name, exp in EXPERIMENTS.items():
        assert exp.defaults.name == name and exp.description


def test_seed_and_replicates_required():
    with pytest.raises(ValueError, match="seed"):
        run_experiment(ExperimentSpec("median_rayleigh"))
    with pytest.raises(ValueError, match="at least 100"):
        run_experiment(ExperimentSpec("median_rayleigh", seed=1, n=100, reps=50))
    with pytest.raises(KeyError):
        run_experiment(ExperimentSpec("nope", seed=1))


@pytest.mark.parametrize("name,strategy", [
    ("records_clt", "median"),
    ("best_of_r_clt", "median"),
    ("gap_exponential", "best-of:2"),
    ("median_rayleigh", "percentile:1/2"),
    ("tnsmall_check", "median"),
])
def test_regime_mismatch(name, strategy):
    with pytest.raises(WrongRegimeError):
        run_experiment(ExperimentSpec(name, seed=1, strategy=strategy, n=100, m=10, reps=100))


def _quick(name, **kw):
    return run_experiment(ExperimentSpec(name, seed=20240601, **kw))


def test_quick_runs_serialise():
    reports = [
        _quick("median_rayleigh", n=20_000, reps=2000, threshold=0.05),
        _quick("records_clt", n=10_000, reps=2000, params={"var_rel_tol": 0.15}),
        _quick("gap_exponential", n=10_000, reps=2000),
        _quick("gap_scaled_law", n=10_000, reps=2000),
        _quick("conditional_first_value", n=10_000, reps=2000),
        _quick("tle_offsets", n=20_000, reps=100),
        _quick("sampler_equivalence", reps=5000, params={"ms": [5, 20]}),
        _quick("oracle_equivalence", reps=50_000, params={"ns": [4, 5]}),
        _quick("as_convergence_probe", reps=4, params={"j_range": (8, 12), "min_decreasing": 3}),
    ]
    for r in reports:
        d = r.to_dict()
        json.dumps(d)
        assert "runtime_seconds" not in d and r.runtime > 0
        assert d["spec"]["seed"] == 20240601
        assert r.passed, (r.name, r.statistics)


def test_reports_independent_of_threads():
    a = _quick("gap_exponential", n=5000, reps=9000).to_dict()
    b = run_experiment(ExperimentSpec("gap_exponential", seed=20240601, n=5000, reps=9000), threads=3).to_dict()
    assert a == b


def test_early_independence_reports_exact_value():
    r = _quick("early_independence_probe", n=10_000, reps=5000)
    exact = r.statistics["exact_finite_n_correlation"]
    _, var = best_of_moments(1, 10_000)
    assert exact == pytest.approx(0.5 / math.sqrt(var))
    assert abs(r.statistics["correlation"] - exact) < 4 / math.sqrt(5000)


def test_percentile_table():
    assert set(PERCENTILE_TABLE) == {"1", "1/2", "1/3", "2/3", "1/4", "3/4", "1/5", "2/5", "3/5", "4/5"}
    rows = percentile_table_rows()
    assert len(rows) == 20
    assert max(r["closed_rel_err"] for r in rows) < 1e-8
    assert max(r["product_rel_err"] for r in rows) < 1e-6


def test_best_of_moments_records():
    n = 1000
    H = math.fsum(1 / k for k in range(1, n + 1))
    H2 = math.fsum(1 / k**2 for k in range(1, n + 1))
    mean, var = best_of_moments(1, n)
    assert mean == pytest.approx(H, rel=1e-14) and var == pytest.approx(H - H2, rel=1e-13)
    mean3, _ = best_of_moments(3, n)
    assert mean3 == pytest.approx(3 * H - 2.5, rel=1e-13)


def test_median_gap_cdf():
    x = np.linspace(0, 200, 2001)
    F = median_gap_cdf(x)
    assert F[0] == 0 and np.all(np.diff(F) > 0) and F[-1] < 1
    mean, _ = integrate.quad(lambda t: 1 - median_gap_cdf(t), 0, np.inf, limit=200)
    assert mean == pytest.approx(math.sqrt(math.pi), rel=1e-6)


def test_trend_statistic():
    flat = np.zeros(2**6)
    assert np.all(trend_statistic(flat, 2, 6) == 0)
    lr = np.log1p(1 / np.arange(1, 2**8 + 1))
    T = trend_statistic(lr, 2, 8)
    assert np.all(np.diff(T) < 0)


def test_report_bundle_rules():
    doc, table, code = report_bundle([])
    assert code == 0 and doc["total"] == 0
    ok = TestReport("a", "hypothesis test", True, {}, [], {"seed": 1})
    bad = TestReport("b", "trend check", False, {}, [], {"seed": 2})
    assert report_bundle([ok])[2] == 0
    doc, table, code = report_bundle([ok, bad])
    assert code == 1 and doc["failed"] == ["b"] and "failed: b" in table


def test_fixed_threshold_harness():
    passes = [fixed_threshold_check("1/2", 0.0, 10**5, s).passed for s in range(20)]
    assert sum(passes) >= 18
    r = fixed_threshold_check(0.5, 1.0, 10**5, 3)
    assert r.statistics["E_M_n"] == pytest.approx(r.statistics["w_n_alpha"], rel=0.02)
    with pytest.raises(WrongRegimeError):
        fixed_threshold_check(1, 0.0, 1000, 1)
