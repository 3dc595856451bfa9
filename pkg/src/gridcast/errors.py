"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericalError -> 4.
"""


class GridcastError(Exception):
    """Base class for all package errors."""


class ConfigError(GridcastError):
    """Invalid configuration, recipe, or command-line usage."""


class DataError(GridcastError):
    """Malformed, missing, or unusable input data."""


class NumericalError(GridcastError):
    """A numerical routine failed (rank deficiency, non-convergence, ...)."""


class RankDeficientError(NumericalError):
    """Design matrix is rank deficient; carries the offending column label."""

    def __init__(self, message: str, column: str | None = None):
        super().__init__(message)
        self.column = column


class ConvergenceError(NumericalError):
    """An iterative solver stopped on a barrier or failed to converge."""
