from typing import Any, Optional


class QamError(Exception):
    """Base class for every error raised by the generator and inequality packages."""


class DomainError(QamError, ValueError):
    """A point lies outside the open domain of a generator or of a problem box."""


class RangeError(QamError, ValueError):
    """A value lies outside the convex hull of a generator's range."""


class CompositionError(QamError, ValueError):
    """The inner generator's range does not fit into the outer generator's domain."""


class ArityError(QamError, ValueError):
    """Vector lengths do not match (empty input, points vs weights, coupler arity)."""


class WeightError(QamError, ValueError):
    """A weight vector is negative somewhere or identically zero."""


class GeneratorInvariantError(QamError, ValueError):
    """A generator failed validation; `report` holds the structured violation list."""

    def __init__(self, message: str, report: Any = None) -> None:
        super().__init__(message)
        self.report = report


class ProblemFormatError(QamError, ValueError):
    """Malformed problem/generator/evidence JSON."""

    def __init__(self, message: str, field: Optional[str] = None,
                 line: Optional[int] = None, column: Optional[int] = None) -> None:
        location = ""
        if line is not None:
            location = f" (line {line}, column {column})"
        if field:
            location += f" at field '{field}'"
        super().__init__(f"{message}{location}")
        self.field = field
        self.line = line
        self.column = column


class UnsupportedError(QamError):
    """The requested analysis does not apply to this input (e.g. discontinuous generators)."""


class PreconditionError(QamError):
    """A documented precondition of an operation does not hold."""


class SolverError(QamError, RuntimeError):
    """The simplex solver could not return a verified primal or dual answer."""


class InternalInconsistencyError(QamError, RuntimeError):
    """Two evidence channels produced contradicting results for the same problem."""
