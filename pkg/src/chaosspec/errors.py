"""Exception hierarchy shared by every module."""


class ChaosSpecError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(ChaosSpecError, ValueError):
    """A parameter violates an operation's precondition."""


class ConfigurationError(InvalidParameterError):
    """A simulation or run configuration is inconsistent (raised before any work is done)."""


class DegenerateLawError(ChaosSpecError, ValueError):
    """The requested quantity is undefined for a deterministic random variable."""


class NumericError(ChaosSpecError, ArithmeticError):
    """A numerical routine could not reach its requested accuracy."""

    def __init__(self, message, achieved=None, requested=None):
        super().__init__(message)
        self.achieved = achieved
        self.requested = requested


class NumericOverflowError(NumericError):
    def __init__(self, message, x=None):
        super().__init__(message)
        self.x = x


class PrecisionBudgetError(NumericError):
    def __init__(self, message, required_digits=None, max_digits=None):
        super().__init__(message)
        self.required_digits = required_digits
        self.max_digits = max_digits


class InversionInconsistencyError(NumericError):
    """Characteristic-function inversion produced a non-probability."""
