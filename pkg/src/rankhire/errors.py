"""Exception hierarchy shared by all rankhire modules."""


class RankHireError(Exception):
    """Base class for every error raised by this package."""


class ConstraintViolation(RankHireError, ValueError):
    """A rank sequence breaks ``r(0)=1, r(m) <= r(m+1) <= r(m)+1``."""

    def __init__(self, index, reason):
        super().__init__(f"rank sequence invalid at m={index}: {reason}")
        self.index = index
        self.reason = reason


class InvalidTransform(RankHireError, ValueError):
    pass


class DivergenceError(RankHireError, ArithmeticError):
    pass


class PrecisionError(RankHireError, ArithmeticError):
    pass


class InfiniteMomentError(RankHireError, ValueError):
    pass


class WrongRegimeError(RankHireError, ValueError):
    pass


class UnsupportedConditioning(RankHireError, ValueError):
    pass


class DegenerateInputError(RankHireError, ValueError):
    pass


class EnumerationTooLarge(RankHireError, ValueError):
    pass


class SamplerUnderflowError(RankHireError, OverflowError):
    def __init__(self, index, threshold):
        super().__init__(
            f"acceptance probability exp(-{threshold:.1f}) underflows at k={index}; "
            "reduce m_max"
        )
        self.index = index


class DSLParseError(RankHireError, ValueError):
    def __init__(self, text, position, reason):
        super().__init__(f"cannot parse strategy {text!r} at position {position}: {reason}")
        self.position = position
