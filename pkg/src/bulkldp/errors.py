"""Exception hierarchy shared by all modules."""


class BulkLdpError(Exception):
    """Base class for all package errors."""


class DomainError(BulkLdpError, ValueError):
    """Argument outside the mathematical domain of the operation."""


class PrecisionError(BulkLdpError, ArithmeticError):
    """Requested tolerance is unreachable in double precision."""


class ConvergenceError(BulkLdpError, ArithmeticError):
    """A bracketing/Newton iteration failed to converge within its cap."""


class StepSizeError(BulkLdpError, ValueError):
    """A supplied SDE/ODE step violates the step-size policy."""


class HorizonError(BulkLdpError, RuntimeError):
    """A hitting-time simulation reached the safety horizon without crossing."""


class InsufficientRareEvents(BulkLdpError, RuntimeError):
    """Too few rare-event hits for a statistically meaningful assertion."""


class OverflowGuard(BulkLdpError, ArithmeticError):
    """An exponent exceeded the safe cap for exact exponential moments."""
