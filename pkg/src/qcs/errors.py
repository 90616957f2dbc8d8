"""Exception hierarchy shared by all modules."""


class QcsError(Exception):
    """Base class for every error raised by this package."""


class InvalidSpecError(QcsError, ValueError):
    """A configuration or spec object violates its preconditions."""


class RangeError(QcsError, ValueError):
    """A generated value falls outside the fixed-point register range."""


class UnsupportedConfigurationError(QcsError, ValueError):
    """No construction is available for the requested parameters."""


class DimensionError(QcsError, ValueError):
    pass


class NumericalError(QcsError, ArithmeticError):
    """Base for failures of the numerical algorithms."""


class RankDeficiencyError(NumericalError):
    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class DivergenceError(NumericalError):
    pass


class IllConditionedError(NumericalError):
    pass


class UndefinedSNRError(NumericalError):
    pass


class ConfigError(QcsError, ValueError):
    """Malformed experiment configuration file or CLI arguments."""
