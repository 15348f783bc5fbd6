"""Exception hierarchy.

Every error raised for bad input data derives from :class:`SumDecompError`,
which the CLI maps to exit status 1.
"""


class SumDecompError(Exception):
    """Base class for all domain errors."""


class DomainViolation(SumDecompError, ValueError):
    pass


class NonFiniteElement(SumDecompError, ValueError):
    pass


class SizeMismatch(SumDecompError, ValueError):
    pass


class RootRecoveryFailure(SumDecompError, ArithmeticError):
    pass


class OutOfImage(SumDecompError, ValueError):
    pass


class MalformedLatent(SumDecompError, ValueError):
    pass


class IndexOutOfUniverse(SumDecompError, ValueError):
    pass


class DuplicateIndex(SumDecompError, ValueError):
    pass


class NotInImage(SumDecompError, ValueError):
    pass


class ZeroInput(SumDecompError, ValueError):
    pass


class EmptySet(SumDecompError, ValueError):
    pass


class PreconditionError(SumDecompError, ValueError):
    pass


class UnknownDistribution(SumDecompError, ValueError):
    pass


class ShapeMismatch(SumDecompError, ValueError):
    pass


class NumericalDivergence(SumDecompError, ArithmeticError):
    def __init__(self, batch, message=None):
        self.batch = batch
        super().__init__(message or f"loss became non-finite at batch {batch}")


class InsufficientGrid(SumDecompError, ValueError):
    pass
