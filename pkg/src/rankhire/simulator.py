"""Exact samplers for the rank-based hiring process.

Candidate values are i.i.d. unit-rate exponentials.  Besides full traces the
module offers the threshold-path sampler (independent exponential
increments), the geometric-waiting sampler for hiring epochs ``N_m``, the
Poissonised epochs ``T_m``, batch summaries for large sweeps, and exhaustive
enumeration over permutations for small ``n``.
"""

from __future__ import annotations

import io
import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels as K
from .errors import (
    EnumerationTooLarge,
    SamplerUnderflowError,
    UnsupportedConditioning,
)
from .rng import RngSeed, as_seed, run_blocks
from .strategy import RankSequence

SCHEMA_VERSION = 1
SKIP_RATIO = 32.0


@dataclass
class HiringTrace:
    n: int
    values: np.ndarray
    accepted: np.ndarray
    M: np.ndarray
    N: np.ndarray
    thresholds_at_exam: np.ndarray
    thresholds_by_count: np.ndarray
    seed: Optional[RngSeed] = None
    strategy: str = ""

    @property
    def M_n(self) -> int:
        return int(self.M[-1])

    @property
    def accepted_values(self) -> np.ndarray:
        return self.values[self.N - 1]

    def to_csv(self, header: Optional[dict] = None) -> str:
        """Per-candidate table ``k, X_k, I_k, M_k, threshold``.

        The first line is a ``#``-prefixed JSON header carrying the schema
        version and whatever run configuration the caller passes in.
        """
        meta = {"schema_version": SCHEMA_VERSION, "strategy": self.strategy}
        if self.seed is not None:
            meta["seed"] = self.seed.as_dict()
        meta.update(header or {})
        buf = io.StringIO()
        buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        buf.write("k,X_k,I_k,M_k,threshold\n")
        for k in range(self.n):
            buf.write(
                f"{k + 1},{float(self.values[k])!r},{int(self.accepted[k])},"
                f"{int(self.M[k + 1])},{float(self.thresholds_at_exam[k])!r}\n"
            )
        return buf.getvalue()

    def summary(self) -> dict:
        gaps = gap_statistics(self)
        return {
            "schema_version": SCHEMA_VERSION,
            "strategy": self.strategy,
            "n": self.n,
            "M_n": self.M_n,
            "N": [int(v) for v in self.N],
            "L_n": gaps.L_n,
            "P_n": gaps.P_n,
            "seed": None if self.seed is None else self.seed.as_dict(),
        }


def _trace(strategy, values, force_first=False, seed=None):
    n = values.size
    r = strategy.ranks(n)
    accepted, M, thr, y_count, N = K.trace_kernel(values, r, force_first)
    return HiringTrace(n, values, accepted, M, N, thr, y_count, seed, str(strategy))


def simulate_direct(strategy: RankSequence, n: int, seed) -> HiringTrace:
    if n < 1:
        raise ValueError("n must be at least 1")
    seed = as_seed(seed)
    values = seed.generator("trace").standard_exponential(n)
    return _trace(strategy, values, seed=seed)


def simulate_values(strategy: RankSequence, values) -> HiringTrace:
    """Run the process on an explicit value sequence (larger is better)."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size < 1:
        raise ValueError("values must be a non-empty 1-d sequence")
    return _trace(strategy, values)


def simulate_permutation(strategy: RankSequence, ranks) -> HiringTrace:
    """Deterministic run where candidate k has value ``ranks[k]`` (1 = worst)."""
    arr = np.asarray(ranks)
    n = arr.size
    if arr.ndim != 1 or n < 1 or sorted(arr.tolist()) != list(range(1, n + 1)):
        raise ValueError(f"expected a permutation of 1..{n}, got {list(arr)}")
    return simulate_values(strategy, arr.astype(np.float64))


def conditional_simulate(strategy: RankSequence, n: int, x1: float, seed) -> HiringTrace:
    """Trace with the first value fixed to ``x1`` (first candidate always hired)."""
    if strategy.rank(1) != 1:
        raise UnsupportedConditioning(
            "conditioning on the first value is only supported when r(1) = 1"
        )
    if x1 < 0:
        raise ValueError("x1 must be non-negative")
    seed = as_seed(seed)
    values = seed.generator("trace").standard_exponential(n)
    values[0] = x1
    return _trace(strategy, values, force_first=True, seed=seed)


class GapStats(NamedTuple):
    L_n: int
    P_n: float


def gap_statistics(trace: HiringTrace) -> GapStats:
    """Candidates since the last hire, and the acceptance probability faced by candidate n."""
    last = int(trace.N[-1]) if trace.N.size else 0
    return GapStats(trace.n - last, math.exp(-trace.thresholds_at_exam[-1]))


def accepted_offsets(trace: HiringTrace) -> np.ndarray:
    """Hired values minus the threshold faced by the last candidate."""
    return trace.values[trace.accepted] - trace.thresholds_at_exam[-1]


# independent reference for small n: threshold recomputed by sorting


def _reference_hires(values, r):
    hired = []
    last = 0
    for k, v in enumerate(values, 1):
        m = len(hired)
        rm = int(r[m])
        thr = 0.0 if rm > m else sorted(hired, reverse=True)[rm - 1]
        if rm > m or v > thr:
            hired.append(v)
            last = k
    return len(hired), len(values) - last


class ExactDistribution(NamedTuple):
    M: dict
    L: dict

    def vector(self, n: int) -> list:
        """``P(M_n = m)`` for ``m = 0..n``."""
        return [self.M.get(m, Fraction(0)) for m in range(n + 1)]


def brute_force_distribution(strategy: RankSequence, n: int, limit: int = 10) -> ExactDistribution:
    """Exact law of ``M_n`` and ``L_n`` by running every permutation of ``1..n``.

    The threshold is recomputed from scratch by sorting at each step, so
    this path shares no code with the heap-based simulators.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > limit:
        raise EnumerationTooLarge(
            f"n={n} needs {math.factorial(n):,} permutations "
            f"({math.factorial(n) * n:,} steps); limit is n <= {limit}"
        )
    r = strategy.ranks(n)
    cm, cl = Counter(), Counter()
    for perm in itertools.permutations(range(1, n + 1)):
        m, gap = _reference_hires(perm, r)
        cm[m] += 1
        cl[gap] += 1
    total = math.factorial(n)
    return ExactDistribution(
        {k: Fraction(v, total) for k, v in sorted(cm.items())},
        {k: Fraction(v, total) for k, v in sorted(cl.items())},
    )


# threshold path and the fast samplers


@dataclass
class ThresholdPath:
    m_max: int
    Y: np.ndarray
    E: np.ndarray = field(repr=False)


def sample_thresholds(strategy: RankSequence, m_max: int, seed) -> ThresholdPath:
    """``Y_m = sum_{k<=m} delta_k E_k / r(k)`` with i.i.d. unit exponentials ``E_k``."""
    if m_max < 1:
        raise ValueError("m_max must be at least 1")
    r = strategy.ranks(m_max)
    E = as_seed(seed).generator("thresholds").standard_exponential(m_max)
    delta = 1 + r[:-1] - r[1:]
    Y = np.zeros(m_max + 1)
    Y[1:] = K.kahan_cumsum(delta * E / r[1:])
    return ThresholdPath(m_max, Y, E)


def _delta(r):
    d = np.zeros(r.size, dtype=np.int64)
    d[1:] = 1 + r[:-1] - r[1:]
    return d


def _raise_underflow(bad, m_max, strategy):
    hit = bad[bad >= 0]
    if hit.size:
        k = int(hit.min())
        raise SamplerUnderflowError(k, float(-math.log(np.finfo(float).tiny)))


def sample_N_fast_batch(strategy, m_max, reps, seed, threads=1, stream="fast_N") -> np.ndarray:
    """``reps`` independent draws of ``(N_1..N_m_max)`` via geometric waits (float64)."""
    if m_max < 1:
        raise ValueError("m_max must be at least 1")
    r = strategy.ranks(m_max)
    delta = _delta(r)
    master = as_seed(seed).master

    def block(gen, count):
        return K.fast_N_kernel(gen, r, delta, m_max, count)

    parts = run_blocks(block, master, stream, reps, threads)
    N = np.concatenate([p[0] for p in parts])
    _raise_underflow(np.concatenate([p[1] for p in parts]), m_max, strategy)
    return N


def sample_N_fast(strategy: RankSequence, m_max: int, seed) -> np.ndarray:
    """One draw of ``N_1..N_m_max`` (float64 so huge epochs do not overflow)."""
    seed = as_seed(seed)
    r = strategy.ranks(m_max)
    N, bad = K.fast_N_kernel(seed.generator("fast_N"), r, _delta(r), m_max, 1)
    _raise_underflow(bad, m_max, strategy)
    return N[0]


def sample_T_continuous_batch(strategy, m_max, reps, seed, threads=1) -> np.ndarray:
    if m_max < 1:
        raise ValueError("m_max must be at least 1")
    r = strategy.ranks(m_max)
    delta = _delta(r)

    def block(gen, count):
        return K.continuous_T_kernel(gen, r, delta, m_max, count)

    return np.concatenate(run_blocks(block, as_seed(seed).master, "continuous_T", reps, threads))


def sample_T_continuous(strategy: RankSequence, m_max: int, seed) -> np.ndarray:
    seed = as_seed(seed)
    r = strategy.ranks(m_max)
    return K.continuous_T_kernel(seed.generator("continuous_T"), r, _delta(r), m_max, 1)[0]


# batch direct simulation


@dataclass
class SummaryBatch:
    M: np.ndarray
    L: np.ndarray
    P: np.ndarray
    N: np.ndarray


def simulate_summary(
    strategy: RankSequence,
    n: int,
    reps: int,
    seed,
    threads: int = 1,
    x1: Optional[float] = None,
    n_record: int = 0,
    skip_ratio: float = SKIP_RATIO,
    stream: Optional[str] = None,
) -> SummaryBatch:
    """Summary-only direct simulation of ``reps`` runs to horizon ``n``.

    Long runs of rejections are skipped with one geometric draw once the
    acceptance probability falls below ``1/skip_ratio``; ``skip_ratio=inf``
    draws every candidate.  ``x1`` fixes the first value (requires r(1)=1).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if x1 is not None:
        if strategy.rank(1) != 1:
            raise UnsupportedConditioning(
                "conditioning on the first value is only supported when r(1) = 1"
            )
        if x1 < 0:
            raise ValueError("x1 must be non-negative")
    r = strategy.ranks(n)
    x1v = math.nan if x1 is None else float(x1)
    if stream is None:
        stream = "summary" if x1 is None else "summary_conditional"

    def block(gen, count):
        return K.summary_kernel(gen, r, n, count, float(skip_ratio), x1v, n_record)

    parts = run_blocks(block, as_seed(seed).master, stream, reps, threads)
    return SummaryBatch(*(np.concatenate([p[i] for p in parts]) for i in range(4)))


def direct_N(
    strategy, m_max, reps, seed, threads=1, skip_ratio=SKIP_RATIO, stream="direct_N"
) -> np.ndarray:
    """Hiring epochs ``N_1..N_m_max`` from the candidate-by-candidate process."""
    r = strategy.ranks(m_max)

    def block(gen, count):
        return K.direct_N_kernel(gen, r, m_max, count, float(skip_ratio))

    N = np.concatenate(run_blocks(block, as_seed(seed).master, stream, reps, threads))
    if np.any(N[:, 0] < 0):
        raise OverflowError("a hiring epoch exceeded the int64 range; reduce m_max")
    return N


def final_offsets(strategy: RankSequence, n: int, seed, skip_ratio=SKIP_RATIO):
    """Offsets of all hired values from the threshold faced by candidate n, one run."""
    seed = as_seed(seed)
    vals, thr = K.offsets_kernel(seed.generator("offsets"), strategy.ranks(n), n, float(skip_ratio))
    return vals - thr
