"""Exception and warning types raised by wprobe."""


class WprobeError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(WprobeError, ValueError):
    pass


class DomainError(WprobeError, ValueError):
    """Argument outside the mathematical domain (e.g. spacelike separation)."""


class IRDivergenceError(DomainError):
    pass


class NotSupportedError(WprobeError, NotImplementedError):
    pass


class ContractViolationError(WprobeError, TypeError):
    """An operation received an object that does not satisfy its contract."""


class QuadratureError(WprobeError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance.

    The best available estimate and its residual are attached so callers can
    decide whether the value is still usable.
    """

    def __init__(self, message, estimate=None, residual=None):
        super().__init__(message)
        self.estimate = estimate
        self.residual = residual


class ConfigError(WprobeError, ValueError):
    def __init__(self, message, key=None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


class OverlapWarning(UserWarning):
    pass


class PerturbativityWarning(UserWarning):
    pass


class ConvergenceWarning(UserWarning):
    pass
