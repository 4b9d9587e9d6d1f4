"""Error hierarchy shared by every service.

Each error subclasses the closest builtin so callers that only know about
ValueError / RuntimeError keep working.
"""

from typing import Any


class FusionError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(FusionError, ValueError):
    """A parameter is outside its admissible range."""


class ShapeError(FusionError, ValueError):
    """Array dimensions disagree."""


class InvalidInputError(FusionError, ValueError):
    """Input data cannot be used (empty task, too few samples, ...)."""


class SchemaError(InvalidInputError):
    """A required column is missing from an ingested file."""

    def __init__(self, column: str, message: str | None = None):
        self.column = column
        super().__init__(message or f"missing column: {column!r}")


class ParseError(InvalidInputError):
    """A cell could not be parsed as a number."""

    def __init__(self, row: int, column: str, value: Any):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(
            f"row {row}: column {column!r} has non-numeric value {value!r}"
        )


class BudgetError(FusionError, RuntimeError):
    """A brute-force grid exceeds its cell budget."""


class ConvergenceError(FusionError, RuntimeError):
    """An iterative method ran out of iterations.

    Carries the best iterate found so callers can still use it.
    """

    def __init__(
        self,
        message: str,
        best_iterate: Any = None,
        residual: float = float("nan"),
        iterations: int = 0,
    ):
        self.best_iterate = best_iterate
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)
