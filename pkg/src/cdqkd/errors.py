"""Exception hierarchy shared by every module."""


class CDQKDError(Exception):
    """Base class for all library errors."""


class NonUnitaryError(CDQKDError, ValueError):
    pass


class NoConvergenceError(CDQKDError, ArithmeticError):
    pass


class DimensionMismatchError(CDQKDError, ValueError):
    pass


class DependentSeedError(CDQKDError, ValueError):
    pass


class UnknownEncodingError(CDQKDError, KeyError):
    pass


class OddQubitCountError(CDQKDError, ValueError):
    pass


class RecipeInfeasibleError(CDQKDError, ValueError):
    pass


class NonUnitaryResultError(CDQKDError, ArithmeticError):
    """Internal consistency failure while building an operator set."""


class BadPriorsError(CDQKDError, ValueError):
    pass


class BadCountError(CDQKDError, ValueError):
    pass


class ConfigInvalidError(CDQKDError, ValueError):
    pass


class ProtocolOrderError(CDQKDError, RuntimeError):
    """A protocol step was attempted before the step it depends on."""


class TooLargeError(CDQKDError, ValueError):
    pass
