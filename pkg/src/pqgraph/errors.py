"""Exception types raised by pqgraph."""


class PQGraphError(Exception):
    """Base class for all library errors."""


class SizeMismatchError(PQGraphError, ValueError):
    """A graph function does not have one value per vertex."""


class InvalidParameterError(PQGraphError, ValueError):
    """An exponent, tolerance or parameter is outside its admissible range."""


class NonPositiveFunctionError(PQGraphError, ValueError):
    """An operation involving the singular term received a value u(x) <= 0."""


class DegenerateDirectionError(PQGraphError, ValueError):
    """The fibering map of the zero function is undefined."""


class NoStationaryError(PQGraphError, ValueError):
    """The fibering map has no stationary point (g * u^(alpha+1) integrates to 0)."""


class FiberClassificationError(PQGraphError):
    """The fibering map has no usable root for the requested branch."""

    def __init__(self, message, classification=None):
        super().__init__(message)
        self.classification = classification


class NotInRangeError(PQGraphError, ValueError):
    """lambda lies outside the interval the requested solver is valid for."""


class ParseError(PQGraphError):
    """Malformed instance file; carries the offending line number."""

    def __init__(self, message, line=None, path=None):
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)
        self.line = line
        self.path = path


class GraphValidationError(PQGraphError, ValueError):
    """Graph or coefficient invariants are violated."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)
