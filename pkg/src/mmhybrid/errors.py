"""Exception types raised across the package."""


class HybridPrecodingError(Exception):
    """Base class for all errors raised by :mod:`mmhybrid`."""


class BudgetExceeded(HybridPrecodingError):
    """The signal set is too large to materialize; stream pairs instead."""


class DimensionMismatch(HybridPrecodingError, ValueError):
    pass


class InvalidNoise(HybridPrecodingError, ValueError):
    pass


class NotDivisible(HybridPrecodingError, ValueError):
    pass


class TooLarge(HybridPrecodingError):
    """Exhaustive enumeration would visit too many partitions."""


class ZeroMatrix(HybridPrecodingError, ValueError):
    pass


class SearchStalled(HybridPrecodingError):
    """The line search halved the stepsize past its limit without success."""


class ConfigError(HybridPrecodingError, ValueError):
    pass


class FixtureMissing(ConfigError, FileNotFoundError):
    pass
