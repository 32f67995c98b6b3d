"""Deterministic cumulative sequences derived from a strategy.

All arrays are indexed by ``m`` (length ``m_max + 1``).  ``delta[k]`` is 1
exactly when ``r(k) == r(k-1)``; ``delta[0]`` is a zero placeholder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import digamma

from ._kernels import kahan_cumsum
from .errors import DivergenceError, PrecisionError
from .strategy import RankSequence

LOG_FLOAT_MAX = 709.0


@dataclass
class DerivedProfile:
    m_max: int
    r: np.ndarray
    delta: np.ndarray
    y: np.ndarray
    y_hat: np.ndarray
    sigma2: np.ndarray
    sigma2_hat: np.ndarray
    log_lam: np.ndarray
    beta2: np.ndarray

    @property
    def lam(self) -> np.ndarray:
        """``lambda_m = sum_{k<m} e^{y_k}``; inf where it would overflow."""
        with np.errstate(over="ignore"):
            return np.exp(self.log_lam)

    @property
    def lam_available_upto(self) -> int:
        """Largest m whose plain ``lambda_m`` is representable."""
        ok = np.flatnonzero(self.log_lam <= LOG_FLOAT_MAX)
        return int(ok[-1]) if ok.size else 0

    def harmonic_tail(self, power: int = 1) -> np.ndarray:
        """``sum_{l=2}^{r(m)} l^-power`` for every m (independent of the profile sums)."""
        top = int(self.r.max())
        ell = np.arange(1, top + 1, dtype=np.float64)
        cum = kahan_cumsum(ell**-power)
        return cum[self.r - 1] - 1.0


def _prefixed(values):
    out = np.empty(values.size + 1)
    out[0] = 0.0
    out[1:] = kahan_cumsum(values)
    return out


def derive_profile(strategy: RankSequence, m_max: int) -> DerivedProfile:
    if m_max < 1:
        raise ValueError("m_max must be at least 1")
    r = strategy.ranks(m_max)
    delta = np.zeros(m_max + 1)
    delta[1:] = 1 + r[:-1] - r[1:]
    inv = 1.0 / r[1:]
    inv2 = inv * inv
    y = _prefixed(delta[1:] * inv)
    sigma2_hat = _prefixed(inv2)
    log_lam = np.empty(m_max + 1)
    log_lam[0] = -np.inf
    log_lam[1:] = np.logaddexp.accumulate(y[:-1])
    return DerivedProfile(
        m_max=m_max,
        r=r,
        delta=delta,
        y=y,
        y_hat=_prefixed(inv),
        sigma2=_prefixed(delta[1:] * inv2),
        sigma2_hat=sigma2_hat,
        log_lam=log_lam,
        beta2=r.astype(np.float64) ** 2 * sigma2_hat,
    )


def _mean_offset(r, alpha, k0, k1, period):
    """Average of ``r(k) - alpha k`` over ``k0 < k <= k1``, whole periods when known."""
    span = k1 - k0
    if period is not None and period[1] <= span:
        span -= span % period[1]
    k = np.arange(k1 - span + 1, k1 + 1, dtype=np.float64)
    return float(np.mean(r[k1 - span + 1 : k1 + 1] - alpha * k))


def rho(strategy: RankSequence, alpha, tol: float = 1e-10, k_max: int = 2**24) -> float:
    """``sum_m (1/r(m) - 1/(alpha m))`` for a roughly linear strategy.

    Partial sums are taken over doubling windows.  The tail past ``K`` is
    estimated by replacing ``r(k)`` with ``alpha k + t`` where ``t`` is the
    mean offset ``r(k) - alpha k`` over the last window; that tail has the
    closed form ``(psi(K+1) - psi(K+1+t/alpha)) / alpha``.  Iteration stops
    once two consecutive corrected estimates agree within ``tol``.
    """
    a = float(alpha)
    period = strategy.period
    K = 2**10
    prev_est = None
    raw_steps = []
    while K <= k_max:
        r = strategy.ranks(K)
        k = np.arange(1, K + 1, dtype=np.float64)
        terms = 1.0 / r[1:] - 1.0 / (a * k)
        partial = math.fsum(terms)
        raw_steps.append(partial)
        if len(raw_steps) >= 4:
            d = np.abs(np.diff(raw_steps[-4:]))
            if d[-1] > 0 and d[-1] >= 0.9 * d[-2] and d[-2] >= 0.9 * d[-3]:
                raise DivergenceError(
                    f"partial sums of 1/r(m) - 1/({a:g} m) are not Cauchy over doubling windows"
                )
        shift = _mean_offset(r, a, K // 2, K, period) / a
        if K + 1 + shift <= 0:
            tail = math.nan
        else:
            tail = (digamma(K + 1) - digamma(K + 1 + shift)) / a
        est = partial + tail
        if prev_est is not None and math.isfinite(est) and abs(est - prev_est) < tol:
            return est
        prev_est = est
        K *= 2
    raise PrecisionError(f"rho did not reach tol={tol} by K={k_max}")


def alpha_float(alpha) -> float:
    return float(Fraction(alpha)) if isinstance(alpha, str) else float(alpha)
