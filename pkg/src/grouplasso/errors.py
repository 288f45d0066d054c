"""Exception hierarchy shared across the solver and the CLI."""

from __future__ import annotations


class SolverError(Exception):
    """Base class for all errors raised by this package."""


class IterationLimit(SolverError):
    """An iterative routine exhausted its iteration budget."""


class ConvergenceFailure(SolverError):
    """A numerical routine failed to reach its convergence tolerance."""


class KktLoopLimit(SolverError):
    """The screen-refit loop kept finding KKT violators past its cap."""


class NonFiniteLoss(SolverError):
    """A loss evaluation produced NaN or infinity."""


class MemoryBudgetExceeded(SolverError):
    """Materializing cached gradient-update columns would exceed the budget."""


class DimensionMismatch(SolverError, ValueError):
    """Shapes or index ranges passed to a matrix operation are inconsistent."""


class ParseError(SolverError):
    """A CSV cell could not be parsed; carries the 1-based row and column."""

    def __init__(self, message: str, row: int | None = None, col: int | None = None):
        super().__init__(message)
        self.row = row
        self.col = col


class RaggedRows(ParseError):
    """A CSV row has a different number of cells than the first row."""
