"""Exception hierarchy.

Everything raised on purpose by the package derives from ``PrecisionError``.
Validation problems additionally subclass ``ValueError`` so callers that only
know about the builtin still catch them.
"""


class PrecisionError(Exception):
    """Base class for all package errors."""


class ValidationError(PrecisionError, ValueError):
    """A model specification violates one of its invariants."""


class NonPSDCovariance(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class NonMonotoneThresholds(ValidationError):
    pass


class InadmissiblePattern(ValidationError):
    pass


class ParseError(PrecisionError):
    """Malformed configuration text."""


class ComputationError(PrecisionError):
    """A numerical procedure could not produce a meaningful value."""


class GridTooCoarse(ComputationError, ValueError):
    pass


class ZeroMarginal(ComputationError):
    pass


class PatternSpaceTooLarge(ComputationError):
    pass


class SingularTheta(ComputationError):
    pass


class DegenerateSum(ComputationError):
    pass


class DegenerateOutcome(ComputationError):
    pass


class DegenerateRegressor(ComputationError):
    pass


class IllConditionedBasis(ComputationError):
    pass


class UnsupportedAnalytic(ComputationError):
    pass
