"""Exception types shared across the package."""


class RotSqueezeError(Exception):
    pass


class DigitError(RotSqueezeError, ValueError):
    pass


class EmptyDigits(DigitError):
    pass


class NonPositiveDigit(DigitError):
    pass


class PrefixTooShort(DigitError):
    pass


class StructureViolation(DigitError):
    pass


class NotAlternating(DigitError):
    pass


class NotEnoughStages(DigitError):
    pass


class InsufficientPrecision(RotSqueezeError):
    """The digit prefix cannot certify every orbit comparison up to the horizon.

    ``required_q`` is the smallest value the next convergent denominator must
    exceed; extend the digits until some q_{K+1} > required_q.
    """

    def __init__(self, message, required_q, best_q=None):
        super().__init__(message)
        self.required_q = required_q
        self.best_q = best_q


class ExprSyntaxError(RotSqueezeError, ValueError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class NegativeOrZeroConstant(ExprSyntaxError):
    pass


class NonConstantExponent(ExprSyntaxError):
    pass


class ExprDomainError(RotSqueezeError, ValueError):
    """Expression value is not a positive finite real at the requested argument."""


class EmptyFamily(RotSqueezeError, ValueError):
    pass


class InfeasibleSpec(RotSqueezeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class BudgetExceeded(RotSqueezeError):
    def __init__(self, message, near_miss=None):
        super().__init__(message)
        self.near_miss = near_miss


class VerificationHorizonTooSmall(UserWarning):
    pass
