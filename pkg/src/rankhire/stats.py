"""Goodness-of-fit and interval statistics (thin layer over ``scipy.stats``)."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import stats

from .errors import DegenerateInputError

MIN_SAMPLES = 100


class TestResult(NamedTuple):
    statistic: float
    p_value: float


TestResult.__test__ = False


class MomentCI(NamedTuple):
    estimate: float
    low: float
    high: float
    standard_error: float
    passed: bool


def _sample(x, name="samples", check_spread=True):
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size < MIN_SAMPLES:
        raise ValueError(f"{name} needs at least {MIN_SAMPLES} points, got {x.size}")
    if check_spread and np.all(x == x[0]):
        raise DegenerateInputError(f"{name} has zero variance")
    return x


def ks_one_sample(samples, cdf) -> TestResult:
    """Kolmogorov distance to a continuous CDF with its asymptotic p-value."""
    x = _sample(samples)
    res = stats.kstest(x, cdf, method="asymp")
    return TestResult(float(res.statistic), float(res.pvalue))


def ks_critical(n: int, level: float, m: int | None = None) -> float:
    """Asymptotic KS critical distance for one sample (or two samples of sizes n, m)."""
    eff = n if m is None else n * m / (n + m)
    return float(stats.kstwobign.isf(level)) / np.sqrt(eff)


def ks_two_sample(a, b) -> TestResult:
    a = _sample(a, "a", check_spread=False)
    b = _sample(b, "b", check_spread=False)
    if np.all(a == a[0]) and np.all(b == b[0]):
        raise DegenerateInputError("both samples are constant")
    res = stats.ks_2samp(a, b, method="asymp")
    return TestResult(float(res.statistic), float(res.pvalue))


def pool_cells(counts, expected, min_expected=5.0):
    """Merge adjacent cells (in order) until every expected count is at least ``min_expected``."""
    counts = np.asarray(counts, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    oc, ec = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(counts, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            oc.append(acc_o)
            ec.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if ec:
            oc[-1] += acc_o
            ec[-1] += acc_e
        else:
            oc.append(acc_o)
            ec.append(acc_e)
    return np.array(oc), np.array(ec)


def chi_square(counts, expected) -> TestResult:
    """Pearson chi-square; ``expected`` is rescaled to the observed total."""
    counts = np.asarray(counts, dtype=np.float64)
    expected = np.asarray(expected, dtype=np.float64)
    if counts.shape != expected.shape:
        raise ValueError("counts and expected must have the same shape")
    if np.any(expected[counts > 0] <= 0):
        return TestResult(float("inf"), 0.0)
    keep = expected > 0
    counts, expected = counts[keep], expected[keep]
    expected = expected * counts.sum() / expected.sum()
    if counts.size < 2:
        raise DegenerateInputError("chi-square needs at least two cells")
    if np.any(expected < 5):
        raise ValueError("expected counts below 5; pool cells first")
    res = stats.chisquare(counts, expected)
    return TestResult(float(res.statistic), float(res.pvalue))


def moment_ci(samples, s: float, target: float, level: float | None = None, z: float = 3.0) -> MomentCI:
    """Normal-approximation CI for ``E X^s``; passes when ``target`` lies inside.

    The half-width is ``z`` standard errors, or the two-sided normal quantile
    for ``level`` when one is given.
    """
    x = _sample(samples) ** s
    est = float(np.mean(x))
    se = float(np.std(x, ddof=1) / np.sqrt(x.size))
    if se == 0:
        raise DegenerateInputError("samples have zero variance")
    if level is not None:
        z = float(stats.norm.isf((1 - level) / 2))
    return MomentCI(est, est - z * se, est + z * se, se, est - z * se <= target <= est + z * se)
