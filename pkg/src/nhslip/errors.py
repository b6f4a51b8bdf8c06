"""Exception hierarchy shared by all modules."""


class NHSlipError(Exception):
    """Base class for library errors."""


class SingularMetric(NHSlipError, ArithmeticError):
    pass


class DimensionMismatch(NHSlipError, ValueError):
    pass


class RankDeficientConstraints(NHSlipError, ArithmeticError):
    pass


class IllConditionedFrame(NHSlipError, ArithmeticError):
    pass


class UnsupportedOrder(NHSlipError, ValueError):
    pass


class StepTooLargeForStiffness(NHSlipError, ValueError):
    pass


class NonFiniteState(NHSlipError, ArithmeticError):
    pass


class InvalidParams(NHSlipError, ValueError):
    pass


class SchemaError(NHSlipError, KeyError):
    """Config tree does not match the schema; ``path`` names the offending key."""

    def __init__(self, path, message=None):
        self.path = path
        self.message = message or f"invalid or missing key: {path}"
        super().__init__(path)

    def __str__(self):
        return self.message
