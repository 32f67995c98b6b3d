import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from rankhire import (
    BUILTINS,
    BestOf,
    Custom,
    Median,
    Percentile,
    accepted_offsets,
    brute_force_distribution,
    conditional_simulate,
    gap_statistics,
    sample_N_fast,
    sample_T_continuous,
    sample_thresholds,
    simulate_direct,
    simulate_permutation,
)
from rankhire.errors import EnumerationTooLarge, SamplerUnderflowError, UnsupportedConditioning
from rankhire.simulator import (
    _reference_hires,
    direct_N,
    final_offsets,
    sample_N_fast_batch,
    sample_T_continuous_batch,
    simulate_summary,
    simulate_values,
)
from rankhire.stats import chi_square, ks_one_sample, ks_two_sample

ALWAYS = BestOf(10**9)  # r(m) = m + 1 for every feasible m


def test_always_hire():
    t = simulate_direct(ALWAYS, 50, 3)
    assert t.M_n == 50
    assert t.N.tolist() == list(range(1, 51))
    assert np.all(t.thresholds_at_exam == 0) and np.all(t.thresholds_by_count == 0)
    assert gap_statistics(t) == (0, 1.0)


def test_permutation_examples():
    assert simulate_permutation(Median(), (1, 2, 3)).M_n == 3
    assert simulate_permutation(Median(), (3, 2, 1)).M_n == 1
    for s in BUILTINS:
        assert simulate_permutation(s, (1,)).M_n == 1
    with pytest.raises(ValueError):
        simulate_permutation(Median(), (1, 1, 2))


@pytest.mark.parametrize("strategy", BUILTINS, ids=str)
def test_kernel_matches_sorting_reference(strategy):
    r = strategy.ranks(6)
    for n in range(1, 7):
        for perm in itertools.permutations(range(1, n + 1)):
            t = simulate_permutation(strategy, perm)
            assert (t.M_n, gap_statistics(t).L_n) == _reference_hires(perm, r)


def test_brute_force_examples():
    d = brute_force_distribution(Median(), 3)
    assert d.M == {1: Fraction(1, 3), 2: Fraction(1, 3), 3: Fraction(1, 3)}
    d = brute_force_distribution(BestOf(1), 4)
    assert [d.M[k] * 24 for k in range(1, 5)] == [6, 11, 6, 1]
    assert brute_force_distribution(ALWAYS, 5).M == {5: 1}
    with pytest.raises(EnumerationTooLarge, match="permutations"):
        brute_force_distribution(Median(), 11)


@pytest.mark.parametrize("strategy,law", [
    (Median(), {1: 1 / 3, 2: 1 / 3, 3: 1 / 3}),
    (BestOf(1), {1: 1 / 3, 2: 1 / 2, 3: 1 / 6}),
])
def test_direct_small_laws(strategy, law):
    reps = 200_000
    b = simulate_summary(strategy, 3, reps, 11, skip_ratio=math.inf)
    for m, p in law.items():
        freq = np.mean(b.M == m)
        assert abs(freq - p) < 3 * math.sqrt(p * (1 - p) / reps)


def test_skipping_matches_oracle():
    # the event-skipping path is exercised by tightening the skip ratio
    exact = brute_force_distribution(Median(), 8)
    b = simulate_summary(Median(), 8, 200_000, 5, skip_ratio=1.5)
    counts = np.bincount(b.M, minlength=9)
    expected = np.array([float(p) for p in exact.vector(8)]) * b.M.size
    assert chi_square(counts[1:], expected[1:]).p_value > 1e-3


def _check_trace(strategy, t):
    r = strategy.ranks(t.n + 1)
    Y = t.thresholds_by_count
    assert np.all(np.diff(Y) >= 0)
    # Y_{m+1} = Y_m when the rank steps up
    for m in range(t.M_n):
        if r[m + 1] == r[m] + 1:
            assert Y[m + 1] == Y[m]
    for k in range(1, t.n + 1):
        Mprev = t.M[k - 1]
        assert t.thresholds_at_exam[k - 1] == Y[Mprev]
        assert bool(t.accepted[k - 1]) == (t.values[k - 1] > t.thresholds_at_exam[k - 1])
        if r[Mprev] == Mprev + 1:
            assert t.thresholds_at_exam[k - 1] == 0 and t.accepted[k - 1]
    # M_n >= m  <=>  N_m <= n
    assert t.N.size == t.M_n
    assert np.all(t.N <= t.n) and np.all(np.diff(t.N) > 0)
    assert t.M[t.N].tolist() == list(range(1, t.M_n + 1))


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(BUILTINS), st.integers(1, 400), st.integers(0, 2**32))
def test_trace_invariants(strategy, n, seed):
    _check_trace(strategy, simulate_direct(strategy, n, seed))


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(BUILTINS), st.integers(1, 300), st.integers(0, 2**32),
       st.sampled_from([np.exp, np.sqrt, lambda x: 3 * x - 7, np.arctan]))
def test_rank_invariance(strategy, n, seed, transform):
    t = simulate_direct(strategy, n, seed)
    ranks = sps.rankdata(t.values, method="ordinal").astype(int)
    by_rank = simulate_permutation(strategy, ranks)
    mapped = simulate_values(strategy, transform(t.values))
    assert np.array_equal(by_rank.accepted, t.accepted)
    assert np.array_equal(mapped.accepted, t.accepted)


def test_thresholds():
    p = sample_thresholds(Median(), 40, 1)
    assert p.Y[0] == 0
    inc = np.diff(p.Y)
    assert np.all(inc[1::2] == 0)  # even k
    r = Median().ranks(40)
    delta = 1 + r[:-1] - r[1:]
    assert np.allclose(inc, delta * p.E / r[1:], rtol=0, atol=1e-13)
    means = np.mean([sample_thresholds(BestOf(1), 30, s).Y[30] for s in range(2000)])
    assert abs(means - 30) < 3 * math.sqrt(30 / 2000)


def test_thresholds_match_direct_law():
    # Y_5 from the path sampler and from direct traces
    a = np.array([sample_thresholds(Median(), 5, s).Y[5] for s in range(3000)])
    traces = [simulate_direct(Median(), 400, s) for s in range(3000)]
    b = np.array([t.thresholds_by_count[5] for t in traces if t.M_n >= 5])
    assert ks_two_sample(a, b).p_value > 1e-3


def test_fast_N_trivial_cases():
    assert sample_N_fast(ALWAYS, 20, 4).tolist() == list(range(1, 21))
    N = sample_N_fast_batch(Median(), 10, 1000, 2)
    assert np.all(N[:, 0] == 1)
    with pytest.raises(SamplerUnderflowError) as exc:
        sample_N_fast(BestOf(1), 2000, 1)
    assert exc.value.index > 0


@pytest.mark.parametrize("strategy,m", [(Median(), 20), (Percentile(Fraction(1, 3)), 20), (BestOf(1), 12)],
                         ids=["median", "percentile-1/3", "records"])
def test_fast_vs_direct(strategy, m):
    a = sample_N_fast_batch(strategy, m, 20_000, 8)[:, -1]
    b = direct_N(strategy, m, 20_000, 8)[:, -1]
    assert ks_two_sample(a, b).p_value > 1e-3


def test_continuous_time():
    T = sample_T_continuous_batch(ALWAYS, 5, 20_000, 3)
    assert abs(T[:, 4].mean() - 5) < 4 * math.sqrt(5 / 20_000)
    T = sample_T_continuous_batch(Median(), 3, 20_000, 3)
    assert ks_one_sample(T[:, 0], sps.expon.cdf).p_value > 1e-3
    # T_3 from the path representation vs Poissonised direct epochs
    N3 = direct_N(Median(), 3, 20_000, 4)[:, 2]
    poisson = np.random.default_rng(9).gamma(N3.astype(float))
    assert ks_two_sample(T[:, 2], poisson).p_value > 1e-3
    assert sample_T_continuous(Median(), 4, 1).shape == (4,)


def test_gaps_and_offsets():
    t = simulate_direct(Median(), 500, 21)
    g = gap_statistics(t)
    assert g.L_n == t.n - t.N[-1]
    assert g.P_n == pytest.approx(math.exp(-t.thresholds_by_count[t.M[-2]]))
    off = accepted_offsets(t)
    assert off.size == t.M_n
    r = Median().ranks(t.n)
    assert np.sum(off > 0) == r[t.M[-2]] - 1 + int(t.accepted[-1])
    one = simulate_direct(Median(), 1, 2)
    assert accepted_offsets(one).tolist() == [one.values[0]]


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(BUILTINS), st.integers(2, 300), st.integers(0, 2**32))
def test_offset_count(strategy, n, seed):
    t = simulate_direct(strategy, n, seed)
    r = strategy.ranks(n)
    m = t.M[-2]
    # the threshold is itself a hired value unless r(m) = m + 1 (threshold 0)
    expected = t.M_n if r[m] == m + 1 else r[m] - 1 + int(t.accepted[-1])
    assert np.sum(accepted_offsets(t) > 0) == expected
    if gap_statistics(t).L_n == 0:
        assert t.accepted[-1]


def test_final_offsets_match_trace_rule():
    off = final_offsets(Percentile(Fraction(1, 2)), 10_000, 3)
    assert off.size > 50 and np.sum(off == 0) == 1


def test_conditioning():
    with pytest.raises(UnsupportedConditioning):
        conditional_simulate(BestOf(3), 10, 1.0, 1)
    t = conditional_simulate(Median(), 200, 30.0, 1)
    assert t.values[0] == 30.0 and t.accepted[0] and t.M_n == 1
    # X_1 = 0 sits below every later value, so it only matters through r:
    # the remaining run is the shifted strategy r(m+1) on candidates 2..n
    shifted = Custom(lambda m: Median().rank(m + 1))
    for seed in range(20):
        c = conditional_simulate(Median(), 300, 0.0, seed)
        rest = simulate_values(shifted, c.values[1:])
        assert np.array_equal(c.accepted[1:], rest.accepted)
        assert c.M_n == 1 + rest.M_n


def test_reproducible_and_thread_independent():
    a = simulate_direct(Median(), 1000, 5)
    b = simulate_direct(Median(), 1000, 5)
    assert np.array_equal(a.values, b.values) and a.to_csv() == b.to_csv()
    s1 = simulate_summary(BestOf(3), 2000, 10_000, 7, threads=1)
    s4 = simulate_summary(BestOf(3), 2000, 10_000, 7, threads=4)
    for x, y in zip((s1.M, s1.L, s1.P), (s4.M, s4.L, s4.P)):
        assert np.array_equal(x, y)
    f1 = sample_N_fast_batch(Median(), 30, 9000, 7, threads=1)
    f3 = sample_N_fast_batch(Median(), 30, 9000, 7, threads=3)
    assert np.array_equal(f1, f3)


def test_csv_export():
    t = simulate_direct(BestOf(3), 20, 7)
    lines = t.to_csv({"n": 20}).splitlines()
    assert lines[0].startswith("# {") and '"schema_version": 1' in lines[0]
    assert lines[1] == "k,X_k,I_k,M_k,threshold"
    assert len(lines) == 22
    k, x, i, m, thr = lines[2].split(",")
    assert (k, i, m, float(thr)) == ("1", "1", "1", 0.0) and float(x) == t.values[0]
    s = t.summary()
    assert s["M_n"] == t.M_n and s["seed"] == {"master": 7, "replicate": 0}
