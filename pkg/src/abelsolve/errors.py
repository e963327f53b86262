"""Exception hierarchy shared by every abelsolve module."""


class AbelError(Exception):
    """Base class for all errors raised by abelsolve."""


class ExpressionSyntaxError(AbelError, ValueError):
    def __init__(self, message, position):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class UnknownIdentifierError(ExpressionSyntaxError):
    pass


class UnboundConstantError(AbelError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class DomainError(AbelError, ArithmeticError):
    """A function was evaluated outside its real domain."""


class ExclusionZoneError(DomainError):
    """Closed-form quantities are undefined for |x| < eps."""


class PoleError(DomainError):
    """x + phi vanished in the closed-form cubic coefficients."""


class SingularDenominatorError(DomainError):
    pass


class OverflowSignal(AbelError, OverflowError):
    pass


class ClassificationAmbiguousError(AbelError, ValueError):
    pass


class NoBracketError(AbelError, ValueError):
    pass


class TurningPointError(AbelError, ValueError):
    pass


class CoefficientZeroError(AbelError, ValueError):
    pass


class QuadratureError(AbelError, RuntimeError):
    pass


class SingularityError(AbelError, RuntimeError):
    """The integrated solution reached y = 0, where y' = 1 + Q/y blows up.

    ``x_last`` is the last abscissa with a valid solution value and
    ``trace`` holds the samples computed up to that point.
    """

    def __init__(self, message, x_last, trace=None):
        super().__init__(f"{message} (last valid x = {x_last!r})")
        self.x_last = x_last
        self.trace = trace
