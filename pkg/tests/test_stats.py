import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from rankhire.errors import DegenerateInputError
from rankhire.stats import chi_square, ks_critical, ks_one_sample, ks_two_sample, moment_ci, pool_cells

LEVEL = 0.05
REPS = 100
BAND = 2 * math.sqrt(LEVEL * (1 - LEVEL) / REPS)


def test_trivial_cases():
    x = np.random.default_rng(0).exponential(size=500)
    assert ks_two_sample(x, x).statistic == 0
    counts = np.array([10.0, 20.0, 30.0])
    assert chi_square(counts, counts).statistic == 0
    with pytest.raises(DegenerateInputError):
        ks_one_sample(np.ones(200), sps.norm.cdf)
    with pytest.raises(DegenerateInputError):
        moment_ci(np.full(200, 2.0), 1, 2.0)
    with pytest.raises(ValueError):
        ks_one_sample(x[:50], sps.expon.cdf)


def test_chi_square_guards():
    assert chi_square([5, 5], [0, 10]).p_value == 0.0
    with pytest.raises(ValueError):
        chi_square([1, 2, 3], [1, 2, 3])


def test_pool_cells():
    oc, ec = pool_cells([1, 2, 30, 1, 1], [1, 2, 30, 1.5, 0.5])
    assert oc.sum() == 35 and ec.sum() == 35
    assert np.all(ec >= 5)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.1, 100), min_size=2, max_size=40))
def test_pool_preserves_totals(expected):
    counts = np.arange(len(expected), dtype=float)
    oc, ec = pool_cells(counts, expected)
    assert oc.sum() == pytest.approx(counts.sum())
    assert ec.sum() == pytest.approx(sum(expected))
    if sum(expected) >= 5:
        assert np.all(ec >= 5)


def test_ks_critical_matches_scipy():
    assert ks_critical(10**4, 0.05) == pytest.approx(1.3581 / 100, rel=1e-3)
    assert ks_critical(10**5, 0.01, 10**5) == pytest.approx(1.6276 * math.sqrt(2e-5), rel=1e-3)


def _rate(reject):
    return sum(reject) / len(reject)


def test_calibration_under_null():
    rng = np.random.default_rng(20240601)
    ks1, ks2, chi, mci = [], [], [], []
    probs = np.array([0.1, 0.2, 0.3, 0.4])
    for _ in range(REPS):
        x = rng.exponential(size=10**4)
        ks1.append(ks_one_sample(x, sps.expon.cdf).p_value < LEVEL)
        ks2.append(ks_two_sample(x, rng.exponential(size=10**4)).p_value < LEVEL)
        counts = rng.multinomial(2000, probs)
        chi.append(chi_square(counts, probs * 2000).p_value < LEVEL)
        mci.append(not moment_ci(x, 2, 2.0, level=1 - LEVEL).passed)
    for name, reject in [("ks1", ks1), ("ks2", ks2), ("chi", chi), ("moment", mci)]:
        assert abs(_rate(reject) - LEVEL) <= BAND, name


def test_moment_ci_fields():
    x = np.random.default_rng(1).normal(1.0, 1.0, size=10**4)
    ci = moment_ci(x, 1, 1.0)
    assert ci.low < ci.estimate < ci.high
    assert ci.high - ci.low == pytest.approx(6 * ci.standard_error)
    assert ci.passed
    assert not moment_ci(x, 1, 1.2).passed
