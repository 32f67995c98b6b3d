"""Compiled inner loops.  Ranks arrays are always ``r(0..m_max)`` as int64."""

import heapq
import math

import numpy as np
from numba import njit

_OPTS = dict(cache=True, nogil=True, error_model="numpy")


@njit(**_OPTS)
def kahan_cumsum(x):
    out = np.empty(x.size)
    s = 0.0
    c = 0.0
    for i in range(x.size):
        t = x[i] - c
        u = s + t
        c = (u - s) - t
        s = u
        out[i] = s
    return out


@njit(**_OPTS)
def _threshold(h, r_m):
    # r(m) == m + 1 leaves fewer than r(m) values in the heap: threshold 0
    if len(h) >= r_m:
        return h[0]
    return 0.0


@njit(**_OPTS)
def trace_kernel(x, r, force_first):
    n = x.size
    accepted = np.zeros(n, dtype=np.bool_)
    M = np.zeros(n + 1, dtype=np.int64)
    thr_exam = np.zeros(n)
    y_count = np.zeros(n + 1)
    N = np.zeros(n + 1, dtype=np.int64)
    h = [0.0]
    h.pop()
    m = 0
    y = 0.0
    for k in range(n):
        thr_exam[k] = y
        # r(m) = m + 1 hires unconditionally (threshold reported as 0)
        if x[k] > y or r[m] > m or (k == 0 and force_first):
            m += 1
            N[m] = k + 1
            heapq.heappush(h, x[k])
            while len(h) > r[m]:
                heapq.heappop(h)
            y = _threshold(h, r[m])
            y_count[m] = y
            accepted[k] = True
        M[k + 1] = m
    return accepted, M, thr_exam, y_count[: m + 1], N[1 : m + 1]


@njit(**_OPTS)
def _geometric(gen, p):
    # exact Ge(p) on {1, 2, ...}: ceil(E / -log(1-p)); returned as float
    e = gen.standard_exponential()
    c = -math.log1p(-p)
    v = np.ceil(e / c)
    return max(v, 1.0)


@njit(**_OPTS)
def summary_kernel(gen, r, n, reps, skip_ratio, x1, n_record):
    """Run ``reps`` hiring processes to horizon ``n``.

    Candidates are drawn one at a time while the expected wait ``e^y`` is at
    most ``skip_ratio``; beyond that the run of rejections is skipped with a
    geometric draw and the hired value is ``y + Exp(1)`` (lack of memory).
    ``x1`` (NaN for none) forces the first candidate's value.
    """
    Mn = np.empty(reps, dtype=np.int64)
    Ln = np.empty(reps, dtype=np.int64)
    Pn = np.empty(reps)
    Nrec = np.zeros((reps, n_record), dtype=np.int64)
    skip_y = math.log(skip_ratio) if skip_ratio < np.inf else np.inf
    for i in range(reps):
        h = [0.0]
        h.pop()
        m = 0
        y = 0.0
        y_prev = 0.0
        pos = 0
        last = 0
        last_is_n = False
        if not math.isnan(x1):
            pos = 1
            m = 1
            last = 1
            heapq.heappush(h, x1)
            while len(h) > r[1]:
                heapq.heappop(h)
            y_prev = y
            y = _threshold(h, r[1])
            if n_record > 0:
                Nrec[i, 0] = 1
            last_is_n = n == 1
        while pos < n:
            if y <= skip_y:
                hit = False
                v = 0.0
                while pos < n:
                    pos += 1
                    v = gen.standard_exponential()
                    if v > y:
                        hit = True
                        break
                if not hit:
                    break
            else:
                gap = _geometric(gen, math.exp(-y))
                if gap > n - pos:
                    pos = n
                    break
                pos += np.int64(gap)
                v = y + gen.standard_exponential()
            m += 1
            last = pos
            if m <= n_record:
                Nrec[i, m - 1] = pos
            heapq.heappush(h, v)
            while len(h) > r[m]:
                heapq.heappop(h)
            y_prev = y
            y = _threshold(h, r[m])
            last_is_n = pos == n
        Mn[i] = m
        Ln[i] = n - last
        Pn[i] = math.exp(-y_prev) if last_is_n else math.exp(-y)
    return Mn, Ln, Pn, Nrec


@njit(**_OPTS)
def direct_N_kernel(gen, r, m_max, reps, skip_ratio):
    """Hiring epochs ``N_1..N_m_max`` by direct simulation (no horizon).

    Returns -1 in column 0 of a row whose wait overflowed int64.
    """
    N = np.zeros((reps, m_max), dtype=np.int64)
    skip_y = math.log(skip_ratio) if skip_ratio < np.inf else np.inf
    for i in range(reps):
        h = [0.0]
        h.pop()
        y = 0.0
        pos = 0
        for m in range(1, m_max + 1):
            if y <= skip_y:
                while True:
                    pos += 1
                    v = gen.standard_exponential()
                    if v > y:
                        break
            else:
                gap = _geometric(gen, math.exp(-y))
                if gap > 9.0e18 - pos:
                    N[i, 0] = -1
                    break
                pos += np.int64(gap)
                v = y + gen.standard_exponential()
            N[i, m - 1] = pos
            heapq.heappush(h, v)
            while len(h) > r[m]:
                heapq.heappop(h)
            y = _threshold(h, r[m])
    return N


@njit(**_OPTS)
def offsets_kernel(gen, r, n, skip_ratio):
    """One run to horizon ``n``; returns hired values and the threshold faced by candidate n."""
    vals = np.empty(n)
    h = [0.0]
    h.pop()
    m = 0
    y = 0.0
    y_prev = 0.0
    pos = 0
    last_is_n = False
    skip_y = math.log(skip_ratio) if skip_ratio < np.inf else np.inf
    while pos < n:
        if y <= skip_y:
            hit = False
            v = 0.0
            while pos < n:
                pos += 1
                v = gen.standard_exponential()
                if v > y:
                    hit = True
                    break
            if not hit:
                break
        else:
            gap = _geometric(gen, math.exp(-y))
            if gap > n - pos:
                break
            pos += np.int64(gap)
            v = y + gen.standard_exponential()
        vals[m] = v
        m += 1
        heapq.heappush(h, v)
        while len(h) > r[m]:
            heapq.heappop(h)
        y_prev = y
        y = _threshold(h, r[m])
        last_is_n = pos == n
    return vals[:m], (y_prev if last_is_n else y)


@njit(**_OPTS)
def fast_N_kernel(gen, r, delta, m_max, reps):
    """``N_m = sum_{k<m} V_k`` with ``V_k ~ Ge(e^{-Y_k})`` along a sampled threshold path.

    Returns float64 epochs and, per row, the first k whose success
    probability underflowed (-1 if none).
    """
    N = np.zeros((reps, m_max))
    bad = np.full(reps, -1, dtype=np.int64)
    for i in range(reps):
        y = 0.0
        total = 1.0
        N[i, 0] = 1.0
        for k in range(1, m_max):
            if delta[k] != 0:
                y += gen.standard_exponential() / r[k]
            p = math.exp(-y)
            if p == 0.0:
                bad[i] = k
                break
            total += _geometric(gen, p)
            N[i, k] = total
    return N, bad


@njit(**_OPTS)
def continuous_T_kernel(gen, r, delta, m_max, reps):
    """``T_m = sum_{k<m} e^{Y_k} E'_k``: hiring epochs under unit-rate Poisson arrivals."""
    T = np.zeros((reps, m_max))
    for i in range(reps):
        y = 0.0
        total = gen.standard_exponential()
        T[i, 0] = total
        for k in range(1, m_max):
            if delta[k] != 0:
                y += gen.standard_exponential() / r[k]
            total += math.exp(y) * gen.standard_exponential()
            T[i, k] = total
    return T
