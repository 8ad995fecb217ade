"""Exception hierarchy.

Regularity failures are separated from plain input errors so callers (the CLI
in particular) can map them to distinct exit codes.
"""


class OpEquivError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(OpEquivError, ValueError):
    pass


class ShapeMismatch(DimensionMismatch):
    pass


class RegularityError(OpEquivError):
    """A genericity condition required by a construction does not hold."""

    condition = None

    def __init__(self, message, condition=None, diagnostic=None):
        super().__init__(message)
        if condition is not None:
            self.condition = condition
        self.diagnostic = diagnostic


class Degenerate(RegularityError):
    condition = "cond1"


class NearDefective(RegularityError):
    condition = "cond2"


class NullNorm(RegularityError):
    condition = "cond3"


class RealityViolation(RegularityError):
    condition = "reality"


class SingularBasis(RegularityError):
    condition = "cond2"


class NotRegular(RegularityError):
    def __init__(self, message, condition=None, diagnostic=None, report=None):
        super().__init__(message, condition, diagnostic)
        self.report = report


class RegularityHole(RegularityError):
    """Raised by grid evaluation; ``points`` lists the failing grid points."""

    def __init__(self, message, points=(), reasons=()):
        super().__init__(message, condition="grid")
        self.points = list(points)
        self.reasons = list(reasons)


class NoIndependentInvariants(RegularityError):
    condition = "natural-coordinates"


class OrderUnderflow(OpEquivError, ValueError):
    pass


class NonInvertibleGauge(OpEquivError, ValueError):
    pass


class NotAFunction(OpEquivError):
    pass


class IncompatibleWords(OpEquivError, ValueError):
    pass


class DocumentError(OpEquivError, ValueError):
    """Malformed input document; message carries the offending field path."""
