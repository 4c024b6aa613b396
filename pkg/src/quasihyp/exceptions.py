"""Exception types raised by quasihyp."""


class QuasiHypError(Exception):
    """Base class for all library errors."""


class DomainError(QuasiHypError, ValueError):
    """A point or parameter lies outside the admissible domain."""


class ShapeError(QuasiHypError, ValueError):
    """A distance matrix has the wrong shape."""


class SizeError(QuasiHypError, ValueError):
    """A finite space is too small, or too large for exhaustive enumeration."""


class MetricViolationError(QuasiHypError, ValueError):
    """Input is not a (pseudo-)metric.

    ``violations`` holds the offending entries when they are known.
    """

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class UndefinedRatioError(QuasiHypError, ValueError):
    """The four-point ratio was requested for a quadruple of identical points."""


class ParseError(QuasiHypError, ValueError):
    """An input file or JSON descriptor could not be parsed."""
