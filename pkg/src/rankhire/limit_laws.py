"""Limit distributions, moment formulas and normalising constants.

Moments of the a.s. limit ``W = lim M_n / n^alpha`` for roughly linear
strategies are evaluated two ways: a truncated infinite product with an
analytic tail correction (any strategy) and closed Gamma-function forms
(linear-periodic strategies only).  All Gamma ratios go through log-Gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.special import gammaln, gammasgn

from .errors import (
    InfiniteMomentError,
    InvalidTransform,
    PrecisionError,
    WrongRegimeError,
)
from .profile import derive_profile
from .strategy import (
    LinearPeriodic,
    Percentile,
    RankSequence,
    TailClass,
    _check_periodic_base,
    as_alpha,
    classify_tail,
    first_repeat,
)

EULER_GAMMA = 0.57721566490153286061
K_START = 2**10
K_LIMIT = 2**24


class MomentResult(NamedTuple):
    value: float
    error_estimate: float
    truncation_index: Optional[int]
    method: str


def _stirling_tail(z):
    z2 = z * z
    return (1.0 / 12 - (1.0 / 360 - (1.0 / 1260 - 1.0 / (1680 * z2)) / z2) / z2) / z


def lgamma_ratio(x: float, s: float) -> float:
    """``log Gamma(x + s) - log Gamma(x)`` for positive arguments, without cancellation."""
    y = x + s
    if x < 10.0 or y < 10.0:
        return float(gammaln(y) - gammaln(x))
    return (
        (x - 0.5) * math.log1p(s / x)
        + s * math.log(y)
        - s
        + _stirling_tail(y)
        - _stirling_tail(x)
    )


def _resolve_alpha(strategy, alpha):
    a = alpha if alpha is not None else strategy.alpha
    if a is None:
        raise ValueError(f"strategy {strategy} has no slope alpha; pass one explicitly")
    return as_alpha(a)


def _check_moment_range(strategy, a, s):
    rstar = first_repeat(strategy)
    if s <= -rstar / a:
        raise InfiniteMomentError(
            f"E W^s is infinite for s={s} <= -r*/alpha = {-rstar / a:g}"
        )


def _chunk_ranks(strategy, lo, hi):
    # r(lo..hi) inclusive; ranks() is prefix-based so slice it
    return strategy.ranks(hi)[lo:]


def _window_shift(r_chunk, k_chunk, a, period):
    """Mean of ``r(k)/alpha - k`` over the chunk, trimmed to whole periods if known."""
    span = r_chunk.size
    if period is not None and period[1] <= span:
        span -= span % period[1]
    rr = r_chunk[-span:].astype(np.float64)
    kk = k_chunk[-span:]
    return float(np.mean(rr / a - kk))


def moment_W_product(
    strategy: RankSequence, alpha=None, s: float = 1.0, tol: float = 1e-9, k_max: int = K_LIMIT
) -> MomentResult:
    """``E W^s = Gamma(s+1)/Gamma(s alpha+2) * prod_k (1+s/k)/(1+s alpha/r(k))``.

    The partial product up to ``K`` is folded into log-Gamma ratios: the
    factors ``1+s alpha/r(k)`` at steps where the rank grows run over
    ``2..R`` (``R = r(K)``) and telescope to
    ``Gamma(R+1+s alpha)/(Gamma(R+1) Gamma(s alpha+2))``, cancelling the
    prefactor and leaving an explicit sum only over repeat steps.  The tail past ``K`` is evaluated in closed form
    for the comparison sequence ``r(k) = alpha (k + b)``, with ``b`` the mean
    offset on the last window.  ``K`` doubles until two consecutive
    corrected values agree to ``tol/10`` in log scale.
    """
    a = _resolve_alpha(strategy, alpha)
    af = float(a)
    s = float(s)
    if s == 0.0:
        return MomentResult(1.0, 0.0, 0, "product")
    _check_moment_range(strategy, af, s)
    period = strategy.period
    min_k = min(2 * period[1], k_max) if period else 0
    repeats = []
    prev_r = 1
    lo = 1
    K = K_START
    prev_est = None
    while True:
        r = _chunk_ranks(strategy, lo, K)
        k = np.arange(lo, K + 1, dtype=np.float64)
        before = np.empty_like(r)
        before[0] = prev_r
        before[1:] = r[:-1]
        rep = r[r == before].astype(np.float64)
        if rep.size:
            terms = np.log1p(s * af / rep)
            if not np.all(np.isfinite(terms)):
                raise InfiniteMomentError(f"factor 1 + s alpha / r(k) vanishes for s={s}")
            repeats.append(float(np.sum(terms)))
        prev_r = int(r[-1])
        b = _window_shift(r, k, af, period)
        R = prev_r
        if K + 1 + b + min(s, 0.0) <= 0:
            raise PrecisionError("tail comparison sequence is not positive; increase K")
        est = (
            lgamma_ratio(K + 1 + b, s)
            - lgamma_ratio(R + 1.0, s * af)
            - math.fsum(repeats)
        )
        if prev_est is not None and K >= min_k:
            diff = abs(est - prev_est)
            if diff < tol / 10:
                value = math.exp(est)
                return MomentResult(value, value * diff, K, "product")
        prev_est = est
        if K * 2 > k_max:
            raise PrecisionError(
                f"product for E W^{s} did not settle to tol={tol} by K={K}"
            )
        lo = K + 1
        K *= 2


def _lgs(x):
    """Sum of log|Gamma| and product of signs over ``x``; ``None`` at a pole."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if np.any((x <= 0) & (x == np.round(x))):
        return None
    return float(np.sum(gammaln(x))), float(np.prod(gammasgn(x)))


def _combine(num, den, extra_log=0.0, extra_sign=1.0):
    logv, sign = extra_log, extra_sign
    for part in num:
        if part is None:
            return None
        logv += part[0]
        sign *= part[1]
    for part in den:
        if part is None:
            return None
        logv -= part[0]
        sign *= part[1]
    return sign * math.exp(logv)


def periodic_forms(nu: int, q: int, base, s: float) -> dict:
    """All four closed forms for a linear-periodic strategy; ``None`` where a form hits a pole."""
    _check_periodic_base(nu, q, tuple(base))
    s = float(s)
    a = nu / q
    r = np.asarray(base, dtype=np.float64)
    i = np.arange(1, q + 1, dtype=np.float64)
    shared_num = _lgs(s / q + r / nu)
    shared_den = _lgs(r / nu)
    forms = {}
    forms["gamma_ratio"] = _combine(
        [_lgs(s + 1), _lgs(i / q), shared_num],
        [_lgs(s * a + 2), shared_den, _lgs(s / q + i / q)],
    )
    forms["q_power"] = _combine([shared_num], [_lgs(s * a + 2), shared_den], s * math.log(q))
    j2 = np.arange(2, nu + 2, dtype=np.float64)
    j1 = np.arange(1, nu + 1, dtype=np.float64)
    log_pre = s * math.log(q) - a * s * math.log(nu)
    forms["nu_shifted"] = _combine(
        [shared_num, _lgs(j2 / nu)], [shared_den, _lgs(s / q + j2 / nu)], log_pre
    )
    lin = nu * s + q
    if lin == 0:
        forms["nu_plain"] = None
    else:
        forms["nu_plain"] = _combine(
            [shared_num, _lgs(j1 / nu)],
            [shared_den, _lgs(s / q + j1 / nu)],
            log_pre + math.log(q) - math.log(abs(lin)),
            math.copysign(1.0, lin),
        )
    return forms


def moment_W_periodic(nu: int, q: int, base, s: float, agree: float = 1e-10) -> float:
    """Closed-form ``E W^s`` when ``r(m+q) = r(m) + nu``.

    Every available closed form is evaluated and they must agree to ``agree``
    (relative); a disagreement raises ``PrecisionError``.
    """
    strategy = LinearPeriodic(nu, q, tuple(base))
    if s == 0:
        return 1.0
    _check_moment_range(strategy, nu / q, s)
    vals = [v for v in periodic_forms(nu, q, base, s).values() if v is not None]
    if not vals:
        raise PrecisionError(f"every closed form has a pole at s={s}")
    ref = vals[1] if len(vals) > 1 else vals[0]
    for v in vals:
        if abs(v - ref) > agree * max(1.0, abs(ref)):
            raise PrecisionError(f"closed forms disagree at s={s}: {vals}")
    return ref


def percentile_base(alpha) -> tuple[int, int, tuple]:
    """``(nu, q, r(1..q))`` for the percentile strategy with rational alpha."""
    a = Fraction(alpha)
    nu, q = a.numerator, a.denominator
    return nu, q, tuple(-((-nu * i) // q) for i in range(1, q + 1))


def c_alpha(alpha, tol: float = 1e-9) -> MomentResult:
    """``E W_alpha`` for the alpha-percentile strategy via the infinite product."""
    return moment_W_product(Percentile(alpha), alpha, 1.0, tol)


def c_alpha_GW(alpha, tol: float = 1e-9, k_max: int = K_LIMIT) -> MomentResult:
    """``E W_alpha`` via the series ``[1 + sum_k theta_k / r(k) P_k] / ((alpha+1) Gamma(alpha+1))``.

    ``theta_k = ceil(alpha k) - alpha k`` and ``P_k = prod_{j<=k} 1/(1 + alpha/r(j))``.
    Past ``K`` the series is replaced by ``mean(theta) P_K / alpha``, its exact
    value when ``r(k) = alpha k + mean(theta)``.
    """
    strategy = Percentile(alpha)
    a = strategy.value
    af = float(a)
    period = strategy.period
    min_k = min(2 * period[1], k_max) if period else 0
    denom = (af + 1.0) * math.gamma(af + 1.0)
    parts = []
    log_p = 0.0
    lo = 1
    K = K_START
    prev_est = None
    while True:
        r = _chunk_ranks(strategy, lo, K)
        k = np.arange(lo, K + 1, dtype=np.int64)
        if isinstance(a, Fraction):
            theta = (r * a.denominator - a.numerator * k) / a.denominator
        else:
            theta = r - af * k
        lp = log_p - np.cumsum(np.log1p(af / r))
        parts.append(float(np.sum(theta / r * np.exp(lp))))
        log_p = float(lp[-1])
        span = theta.size
        if period is not None and period[1] <= span:
            span -= span % period[1]
        tail = float(np.mean(theta[-span:])) * math.exp(log_p) / af
        est = (1.0 + math.fsum(parts) + tail) / denom
        if prev_est is not None and K >= min_k:
            diff = abs(est - prev_est)
            if diff < tol / 10:
                return MomentResult(est, diff, K, "series")
        prev_est = est
        if K * 2 > k_max:
            raise PrecisionError(f"series for c_alpha did not settle to tol={tol} by K={K}")
        lo = K + 1
        K *= 2


# special laws


def rayleigh_cdf(x):
    x = np.maximum(np.asarray(x, dtype=np.float64), 0.0)
    return -np.expm1(-x * x / 4)


def rayleigh_pdf(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0, 0.5 * x * np.exp(-x * x / 4), 0.0)


def chi4_pdf(x):
    """Density ``x^3/8 e^{-x^2/4}`` (``W / sqrt 2`` is chi with 4 degrees of freedom)."""
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0, x**3 / 8 * np.exp(-x * x / 4), 0.0)


def chi4_cdf(x):
    t = np.maximum(np.asarray(x, dtype=np.float64), 0.0) ** 2 / 4
    return -np.expm1(-t) - t * np.exp(-t)


def gumbel_Z_cdf(x):
    return np.exp(-np.exp(-(np.asarray(x, dtype=np.float64) - EULER_GAMMA)))


def _check_tle_alpha(alpha):
    a = float(alpha)
    if a == 1.0:
        raise WrongRegimeError("the accepted-value law is only available for alpha < 1")
    if not 0 < a < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {a}")
    return a


def laplace_V_cdf(alpha, u):
    """Limit law of accepted values minus the current threshold."""
    a = _check_tle_alpha(alpha)
    u = np.asarray(u, dtype=np.float64)
    neg = (1 - a) * np.exp(a * np.minimum(u, 0.0) / (1 - a))
    pos = 1 - a * np.exp(-np.maximum(u, 0.0))
    return np.where(u <= 0, neg, pos)


def laplace_V_pdf(alpha, u):
    a = _check_tle_alpha(alpha)
    u = np.asarray(u, dtype=np.float64)
    neg = a * np.exp(a * np.minimum(u, 0.0) / (1 - a))
    pos = a * np.exp(-np.maximum(u, 0.0))
    return np.where(u < 0, neg, pos)


F_u = laplace_V_cdf


@dataclass(frozen=True)
class LimitLaw:
    """A limit distribution with whichever evaluators are available in closed form."""

    name: str
    moment: Optional[Callable[[float], float]] = None
    cdf: Optional[Callable] = None
    pdf: Optional[Callable] = None


def rayleigh_law() -> LimitLaw:
    return LimitLaw(
        "W_rayleigh",
        lambda s: 2.0**s * math.gamma(s / 2 + 1),
        rayleigh_cdf,
        rayleigh_pdf,
    )


def chi4_law() -> LimitLaw:
    return LimitLaw("W_chi4", lambda s: 2.0**s * math.gamma(s / 2 + 2), chi4_cdf, chi4_pdf)


def gumbel_law() -> LimitLaw:
    return LimitLaw("Z_gumbel", cdf=gumbel_Z_cdf)


def laplace_law(alpha) -> LimitLaw:
    return LimitLaw(
        f"V_laplace({alpha})",
        cdf=lambda u: laplace_V_cdf(alpha, u),
        pdf=lambda u: laplace_V_pdf(alpha, u),
    )


def product_law(strategy: RankSequence, alpha=None, tol=1e-9) -> LimitLaw:
    return LimitLaw(
        f"W_product({strategy})",
        lambda s: moment_W_product(strategy, alpha, s, tol).value,
    )


def periodic_law(nu, q, base) -> LimitLaw:
    return LimitLaw(f"W_periodic({nu},{q},{tuple(base)})", lambda s: moment_W_periodic(nu, q, base, s))


def gap_law(alpha, strategy: RankSequence) -> LimitLaw:
    return LimitLaw(f"L_gap({strategy})", lambda s: gap_moment(alpha, s, strategy))


# small-r normalisation


@dataclass(frozen=True)
class CLTNormalizer:
    strategy: RankSequence
    n: int
    mu: int
    gamma: float

    def standardize(self, M):
        return (np.asarray(M, dtype=np.float64) - self.mu) / self.gamma


def clt_normalizer(strategy: RankSequence, n: int) -> CLTNormalizer:
    """``mu(n)``: smallest m with ``sum_{k<=m} 1/r(k) >= log n``; ``gamma(n) = beta(mu(n))``."""
    if n < 3:
        raise ValueError("n must be at least 3")
    if classify_tail(strategy).label is not TailClass.SMALL:
        raise WrongRegimeError(f"{strategy} is not a small-r strategy; no normal limit")
    target = math.log(n)
    m_max = 64
    while True:
        prof = derive_profile(strategy, m_max)
        hit = np.flatnonzero(prof.y_hat >= target)
        if hit.size:
            mu = int(hit[0])
            return CLTNormalizer(strategy, n, mu, math.sqrt(prof.beta2[mu]))
        m_max *= 4


def tnsmall_normalize(strategy: RankSequence, m: int, N_m_sample):
    """``(log N_m - (y_m + log r(m))) / s_hat_m`` for a small-r strategy."""
    if m < 1:
        raise ValueError("m must be at least 1")
    prof = derive_profile(strategy, m)
    centre = prof.y[m] + math.log(prof.r[m])
    scale = math.sqrt(prof.sigma2_hat[m])
    return (np.log(np.asarray(N_m_sample, dtype=np.float64)) - centre) / scale


# gaps and transformed strategies


def gap_moment(alpha, s: float, strategy: RankSequence, tol: float = 1e-9) -> float:
    """``E L^s = alpha^-s Gamma(s+1) E W^-s`` for the scaled final gap."""
    a = float(as_alpha(alpha))
    rstar = first_repeat(strategy)
    if not -1 < s < rstar / a:
        raise InfiniteMomentError(f"E L^s is finite only for -1 < s < {rstar / a:g}, got {s}")
    if s == 0:
        return 1.0
    ew = moment_W_product(strategy, alpha, -s, tol).value
    return a**-s * math.gamma(s + 1) * ew


def P_n_asymptotic(alpha, n, W_value):
    a = float(alpha)
    return a * np.asarray(W_value, dtype=np.float64) * float(n) ** (a - 1)


def insert_one_moment(alpha, s, EWs):
    """Moment after prepending a 1 to the rank sequence."""
    return EWs / (1 + float(alpha) * s)


def decrement_moment(alpha, s, r_m, EWs):
    """Moment after lowering one value ``r(m)`` by one."""
    if r_m <= 1:
        raise InvalidTransform("cannot lower a rank value of 1")
    sa = float(alpha) * s
    return EWs * (1 + sa / r_m) / (1 + sa / (r_m - 1))
