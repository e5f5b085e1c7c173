"""Exception hierarchy shared by every module of the package."""


class FqdioError(Exception):
    """Base class for all errors raised by fqdio."""


class DivisionByZero(FqdioError, ZeroDivisionError):
    pass


class SingularBasis(FqdioError):
    """Basis rows are linearly dependent over K."""


class NonUnimodular(FqdioError):
    pass


class DependentVectors(FqdioError):
    pass


class BudgetExceeded(FqdioError):
    """An enumeration would visit more points than the caller allowed."""


class InsufficientPrecision(FqdioError):
    """Not enough fractional digits are known to decide a predicate."""


class InvalidWeights(FqdioError, ValueError):
    pass


class DimensionMismatch(FqdioError, ValueError):
    pass


class ZeroVector(FqdioError, ValueError):
    pass


class DegenerateFit(FqdioError, ValueError):
    pass


class ConfigError(FqdioError, ValueError):
    pass
