"""Exception hierarchy shared by all mgsda modules."""


class MGSDAError(Exception):
    """Base class for errors raised by mgsda."""


class DimensionMismatch(MGSDAError, ValueError):
    pass


class NotPositiveDefinite(MGSDAError, ValueError):
    pass


class NonFiniteInput(MGSDAError, ValueError):
    pass


class IndexOutOfRange(MGSDAError, IndexError):
    pass


class EmptyGroup(MGSDAError, ValueError):
    pass


class DegenerateSampleSize(MGSDAError, ValueError):
    pass


class InvalidPriors(MGSDAError, ValueError):
    pass


class InvalidCorrelation(MGSDAError, ValueError):
    pass


class OddSupportSize(MGSDAError, ValueError):
    pass


class IndexInSupport(MGSDAError, ValueError):
    pass


class EmptySupport(MGSDAError, ValueError):
    pass


class NoComplement(MGSDAError, ValueError):
    pass


class EmptyComplement(NoComplement):
    pass


class ZeroDiagonal(MGSDAError, ValueError):
    pass


class SingularRestrictedScatter(MGSDAError, ValueError):
    pass


class FixedPointDiverged(MGSDAError, RuntimeError):
    pass


class DegenerateDraw(MGSDAError, RuntimeError):
    pass
