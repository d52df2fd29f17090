"""Exception hierarchy for shiftforge."""


class ShiftForgeError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(ShiftForgeError, ValueError):
    pass


class AsymmetricInput(ShiftForgeError, ValueError):
    """A point set lacks the negation of one of its members."""


class UnsupportedDimension(ShiftForgeError, ValueError):
    pass


class NonIntegralFrequencies(ShiftForgeError, ValueError):
    """An operation needing an integral frequency lattice got rationals."""


class NumericalBreakdown(ShiftForgeError, ArithmeticError):
    """The simplex hit a pivot below tolerance with no alternative."""


class IterationLimit(ShiftForgeError, RuntimeError):
    """The cutting-plane loop still finds violations after max_iterations.

    The best-so-far dual iterate is attached as ``best`` when available.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DegenerateBasis(ShiftForgeError, ArithmeticError):
    pass


class NotPointy(ShiftForgeError, ValueError):
    pass


class ActiveSetInfeasible(ShiftForgeError, ValueError):
    """No feasible rule is supported on the extremal set of the given dual."""


class IrrationalSpectrum(ShiftForgeError, ValueError):
    pass


class DimTooLarge(ShiftForgeError, ValueError):
    pass


class NormExceeded(ShiftForgeError, ValueError):
    pass


class ParseError(ShiftForgeError, ValueError):
    pass
