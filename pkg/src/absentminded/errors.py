"""Exception types shared across the package."""


class AbsentmindedError(Exception):
    """Base class for all package errors."""


class ValidationError(AbsentmindedError, ValueError):
    """An input violates a documented precondition."""


class OffPathError(ValidationError):
    """A belief was needed at an information set that is never reached."""


class SupportMismatch(ValidationError):
    """Empirical and analytic distributions are defined on different cells."""


class NoEquilibriumError(AbsentmindedError):
    """The requested object does not exist (a legitimate negative answer)."""


class StructuralViolation(AbsentmindedError):
    """A delay profile breaks a support or monotonicity property."""

    def __init__(self, message, pair=None, check=None):
        super().__init__(message)
        self.pair = pair
        self.check = check
