"""Exception types shared across the package.

Callers can distinguish recoverable input problems (ties, which the CLI
can jitter away) from genuine numerical failures.
"""


class PredresError(Exception):
    """Base class for all package-specific errors."""


class DomainError(PredresError, ValueError):
    """A value lies outside the mathematical domain of an operation."""


class TieError(PredresError, ValueError):
    """Duplicate values where a strictly increasing sample is required."""


class DegeneracyError(PredresError, ValueError):
    """Degenerate input: zero variance, singular matrix, rank deficiency."""


class NumericalError(PredresError, ArithmeticError):
    """A numerical procedure failed beyond its built-in safeguards."""


class InversionError(PredresError, ValueError):
    """Moment inversion has no valid solution (e.g. implied beta s <= 0)."""


class ParseError(PredresError, ValueError):
    """Malformed input file; message carries row/column location."""
