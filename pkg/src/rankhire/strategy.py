"""Rank-threshold hiring strategies.

A strategy is a sequence ``r(m)``, ``m >= 0``: once ``m`` candidates have been
hired, the next one is hired iff her value beats the ``r(m)``-th best value
hired so far (always hired when ``r(m) == m + 1``).  Every sequence must
satisfy ``r(0) = 1`` and ``r(m) <= r(m+1) <= r(m) + 1``.

All built-ins expose a vectorised ``ranks(m_max)`` returning ``r(0..m_max)``
as an ``int64`` array, plus a scalar ``rank(m)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple, Optional, Sequence, Union

import numpy as np

from .errors import ConstraintViolation, InvalidTransform

Alpha = Union[Fraction, float]


class TailClass(str, enum.Enum):
    LARGE = "large"
    SMALL = "small"
    UNKNOWN = "unknown"


def as_alpha(value) -> Alpha:
    """Coerce to an exact Fraction when possible (str, int, Fraction)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, str)):
        return Fraction(value)
    return float(value)


class RankSequence:
    """Base class; subclasses define ``ranks`` and metadata."""

    kind = "abstract"

    def ranks(self, m_max: int) -> np.ndarray:
        raise NotImplementedError

    def rank(self, m: int) -> int:
        return int(self.ranks(m)[m])

    @property
    def tail(self) -> TailClass:
        return TailClass.UNKNOWN

    @property
    def alpha(self) -> Optional[Alpha]:
        """Slope of ``r(m) ~ alpha m`` when the sequence is roughly linear."""
        return None

    @property
    def period(self) -> Optional[tuple[int, int]]:
        """``(nu, q)`` with ``r(m+q) = r(m) + nu`` for all large m, if known."""
        return None

    def to_dsl(self) -> str:
        raise NotImplementedError(f"{self.kind} sequences have no DSL form")

    def __str__(self):
        try:
            return self.to_dsl()
        except NotImplementedError:
            return repr(self)


@dataclass(frozen=True)
class Median(RankSequence):
    """Hire above the median, ``r(m) = floor(m/2) + 1``."""

    kind = "median"

    def ranks(self, m_max):
        return np.arange(m_max + 1, dtype=np.int64) // 2 + 1

    def rank(self, m):
        return m // 2 + 1

    tail = property(lambda self: TailClass.LARGE)
    alpha = property(lambda self: Fraction(1, 2))
    period = property(lambda self: (1, 2))

    def to_dsl(self):
        return "median"


@dataclass(frozen=True)
class Percentile(RankSequence):
    """``r(m) = ceil(alpha m)`` for ``m >= 1``; exact arithmetic for rational alpha."""

    value: Alpha
    kind = "percentile"

    def __post_init__(self):
        a = as_alpha(self.value)
        if not 0 < a <= 1:
            raise ValueError(f"percentile alpha must lie in (0, 1], got {a}")
        object.__setattr__(self, "value", a)

    def ranks(self, m_max):
        m = np.arange(m_max + 1, dtype=np.int64)
        a = self.value
        if isinstance(a, Fraction):
            r = -((-a.numerator * m) // a.denominator)
        else:
            r = np.ceil(a * m).astype(np.int64)
        r[0] = 1
        return r

    def rank(self, m):
        if m == 0:
            return 1
        a = self.value
        if isinstance(a, Fraction):
            return -((-a.numerator * m) // a.denominator)
        return math.ceil(a * m)

    tail = property(lambda self: TailClass.LARGE)

    @property
    def alpha(self):
        return self.value

    @property
    def period(self):
        if isinstance(self.value, Fraction):
            return (self.value.numerator, self.value.denominator)
        return None

    def to_dsl(self):
        return f"percentile:{self.value}"


@dataclass(frozen=True)
class BestOf(RankSequence):
    """Hire r-records: ``r(m) = min(r, m + 1)``."""

    r: int
    kind = "best-of"

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 1:
            raise ValueError(f"best-of needs a positive integer, got {self.r}")

    def ranks(self, m_max):
        return np.minimum(np.arange(1, m_max + 2, dtype=np.int64), self.r)

    def rank(self, m):
        return min(self.r, m + 1)

    tail = property(lambda self: TailClass.SMALL)

    def to_dsl(self):
        return f"best-of:{self.r}"


def _check_periodic_base(nu, q, base):
    if not 1 <= nu <= q:
        raise ConstraintViolation(0, f"need 1 <= nu <= q, got nu={nu}, q={q}")
    if len(base) != q:
        raise ConstraintViolation(1, f"base must list r(1..q) ({q} values), got {len(base)}")
    seq = [1, *base, base[0] + nu]
    for m in range(1, len(seq)):
        step = seq[m] - seq[m - 1]
        if step not in (0, 1):
            raise ConstraintViolation(m, "jump > 1" if step > 1 else "decrease")


@dataclass(frozen=True)
class LinearPeriodic(RankSequence):
    """``r(m + q) = r(m) + nu`` for ``m >= 1`` with ``r(1..q) = base``."""

    nu: int
    q: int
    base: tuple
    kind = "periodic"

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(int(b) for b in self.base))
        _check_periodic_base(self.nu, self.q, self.base)

    def ranks(self, m_max):
        m = np.arange(m_max + 1, dtype=np.int64)
        j, i = np.divmod(m - 1, self.q)
        r = np.asarray(self.base, dtype=np.int64)[i] + j * self.nu
        r[0] = 1
        return r

    def rank(self, m):
        if m == 0:
            return 1
        j, i = divmod(m - 1, self.q)
        return self.base[i] + j * self.nu

    tail = property(lambda self: TailClass.LARGE)
    alpha = property(lambda self: Fraction(self.nu, self.q))
    period = property(lambda self: (self.nu, self.q))

    def to_dsl(self):
        return f"periodic:nu={self.nu},q={self.q},r={','.join(map(str, self.base))}"


@dataclass(frozen=True)
class Table(RankSequence):
    """Explicit prefix ``r(0..L-1)`` plus a declared continuation rule.

    ``extension`` is ``"constant"`` (repeat the last value) or a pair
    ``(nu, q)``: ``r(m) = r(m - q) + nu`` for ``m >= L`` (needs ``L > q``).
    """

    prefix: tuple
    extension: Union[str, tuple] = "constant"
    kind = "table"

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(int(v) for v in self.prefix))
        if not self.prefix:
            raise ValueError("table prefix is empty")
        ext = self.extension
        if ext != "constant":
            nu, q = (int(v) for v in ext)
            if not 1 <= nu <= q:
                raise ValueError(f"periodic extension needs 1 <= nu <= q, got {nu}, {q}")
            if len(self.prefix) <= q:
                raise ValueError("periodic extension needs a prefix longer than q")
            object.__setattr__(self, "extension", (nu, q))

    def ranks(self, m_max):
        p = np.asarray(self.prefix, dtype=np.int64)
        L = len(p)
        if m_max < L:
            return p[: m_max + 1].copy()
        m = np.arange(m_max + 1, dtype=np.int64)
        r = np.empty(m_max + 1, dtype=np.int64)
        r[:L] = p
        tail = m[L:]
        if self.extension == "constant":
            r[L:] = p[-1]
        else:
            nu, q = self.extension
            j = (tail - (L - q)) // q
            r[L:] = p[tail - j * q] + j * nu
        return r

    @property
    def tail(self):
        return TailClass.SMALL if self.extension == "constant" else TailClass.LARGE

    @property
    def alpha(self):
        if self.extension == "constant":
            return None
        return Fraction(*self.extension)

    @property
    def period(self):
        return None if self.extension == "constant" else self.extension

    def to_dsl(self):
        ext = "constant" if self.extension == "constant" else "periodic:nu={},q={}".format(
            *self.extension
        )
        return f"table:{','.join(map(str, self.prefix))}+{ext}"


@dataclass(frozen=True)
class SqrtFloor(RankSequence):
    """``r(m) = floor(sqrt(m))`` for ``m >= 1``."""

    kind = "sqrt-floor"

    def ranks(self, m_max):
        m = np.arange(m_max + 1, dtype=np.int64)
        s = np.floor(np.sqrt(m.astype(np.float64))).astype(np.int64)
        s -= s * s > m
        s += (s + 1) * (s + 1) <= m
        s[0] = 1
        return s

    def rank(self, m):
        return 1 if m == 0 else math.isqrt(m)

    tail = property(lambda self: TailClass.SMALL)

    def to_dsl(self):
        return "sqrt-floor"


@dataclass(frozen=True)
class IrregularOctal(RankSequence):
    """Piecewise-linear sequence with ``r(8**i) = 2**i``.

    ``r`` climbs with slope one on ``[8**i, 8**i + 2**i]`` and is flat at
    ``2**(i+1)`` up to ``8**(i+1)``.
    """

    kind = "irregular-octal"

    def ranks(self, m_max):
        m = np.arange(m_max + 1, dtype=np.int64)
        r = np.ones(m_max + 1, dtype=np.int64)
        i = 0
        while 8**i <= m_max:
            lo, hi = 8**i, 8 ** (i + 1)
            sel = (m >= lo) & (m < hi)
            climb = np.minimum(m[sel] - lo, 2**i)
            r[sel] = 2**i + climb
            i += 1
        return r

    def rank(self, m):
        if m == 0:
            return 1
        i = (m.bit_length() - 1) // 3
        return 2**i + min(m - 8**i, 2**i)

    tail = property(lambda self: TailClass.SMALL)

    def to_dsl(self):
        return "irregular-octal"


@dataclass(frozen=True, eq=False)
class Custom(RankSequence):
    """User-supplied ``m -> r(m)``; the tail class must be declared, never guessed."""

    func: Callable[[int], int]
    declared_tail: TailClass = TailClass.UNKNOWN
    alpha_hint: Optional[Alpha] = None
    name: str = "custom"
    kind = "custom"

    def ranks(self, m_max):
        return np.fromiter((self.func(m) for m in range(m_max + 1)), np.int64, m_max + 1)

    def rank(self, m):
        return rank_at(self, m)

    @property
    def tail(self):
        return TailClass(self.declared_tail)

    @property
    def alpha(self):
        return self.alpha_hint


@dataclass(frozen=True)
class InsertOne(RankSequence):
    """``base`` with an extra leading 1: ``r~(m) = r(m-1)`` for ``m >= 1``."""

    base: RankSequence
    kind = "insert-one"

    def ranks(self, m_max):
        r = np.empty(m_max + 1, dtype=np.int64)
        r[0] = 1
        if m_max:
            r[1:] = self.base.ranks(m_max - 1)
        return r

    def rank(self, m):
        return 1 if m == 0 else self.base.rank(m - 1)

    tail = property(lambda self: self.base.tail)
    alpha = property(lambda self: self.base.alpha)
    period = property(lambda self: self.base.period)


@dataclass(frozen=True)
class Decremented(RankSequence):
    """``base`` with the single value ``r(at)`` lowered by one."""

    base: RankSequence
    at: int
    kind = "decrement"

    def ranks(self, m_max):
        r = self.base.ranks(m_max)
        if self.at <= m_max:
            r[self.at] -= 1
        return r

    def rank(self, m):
        return self.base.rank(m) - (m == self.at)

    tail = property(lambda self: self.base.tail)
    alpha = property(lambda self: self.base.alpha)
    period = property(lambda self: self.base.period)


class Violation(NamedTuple):
    index: int
    reason: str


def validate_prefix(strategy: RankSequence, M: int) -> Optional[Violation]:
    """Check the defining constraints on ``r(0..M)``; ``None`` means ok."""
    r = strategy.ranks(M)
    if r[0] != 1:
        return Violation(0, "r(0) != 1")
    step = np.diff(r)
    bad = np.flatnonzero((step < 0) | (step > 1))
    if bad.size:
        k = int(bad[0]) + 1
        return Violation(k, "jump > 1" if step[k - 1] > 1 else "decrease")
    if isinstance(strategy, LinearPeriodic) and M > strategy.q:
        q, nu = strategy.q, strategy.nu
        off = np.flatnonzero(r[1 + q :] - r[1 : M + 1 - q] != nu)
        if off.size:
            return Violation(int(off[0]) + 1 + q, "periodicity r(m+q) = r(m)+nu broken")
    return None


def rank_at(strategy: RankSequence, m: int) -> int:
    if m < 0:
        raise ValueError("m must be non-negative")
    if isinstance(strategy, Custom):
        bad = validate_prefix(strategy, m)
        if bad is not None:
            raise ConstraintViolation(*bad)
        return int(strategy.func(m))
    return int(strategy.rank(m))


class TailReport(NamedTuple):
    label: TailClass
    partial_sum: Optional[float] = None


def classify_tail(strategy: RankSequence, diagnostic_m: int = 10**6) -> TailReport:
    """Large (``sum r(m)^-2 < inf``) versus small.

    Built-ins are labelled exactly.  An undeclared custom sequence is
    reported as unknown with the partial sum of ``r(m)^-2`` up to
    ``diagnostic_m`` attached for the caller to judge.
    """
    label = strategy.tail
    if label is not TailClass.UNKNOWN:
        return TailReport(label)
    r = strategy.ranks(diagnostic_m)[1:].astype(np.float64)
    return TailReport(TailClass.UNKNOWN, math.fsum(1.0 / (r * r)))


def insert_one(strategy: RankSequence) -> RankSequence:
    return InsertOne(strategy)


def decrement_at(strategy: RankSequence, m: int) -> RankSequence:
    if m < 1:
        raise InvalidTransform("decrement needs m >= 1")
    r = strategy.ranks(m + 1)
    if not r[m - 1] < r[m] == r[m + 1]:
        raise InvalidTransform(
            f"cannot lower r({m}): need r(m-1) < r(m) = r(m+1), have "
            f"{r[m - 1]}, {r[m]}, {r[m + 1]}"
        )
    return Decremented(strategy, m)


def first_repeat(strategy: RankSequence, scan: int = 10**6) -> float:
    """Smallest ``r(k)`` with ``r(k) = r(k-1)``, ``k >= 1``; inf if none within ``scan``."""
    window = min(1024, scan)
    while True:
        r = strategy.ranks(window)
        rep = np.flatnonzero(r[1:] == r[:-1])
        if rep.size:
            return float(r[rep[0] + 1])
        if window >= scan:
            return math.inf
        window = min(window * 16, scan)


BUILTINS: Sequence[RankSequence] = (
    Median(),
    Percentile(Fraction(1, 2)),
    Percentile(Fraction(1, 3)),
    BestOf(1),
    BestOf(3),
    LinearPeriodic(2, 3, (1, 2, 2)),
    SqrtFloor(),
    IrregularOctal(),
)
