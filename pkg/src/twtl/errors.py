"""Exception types shared across the package."""


class TwtlError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(TwtlError):
    """Raised on malformed formula text; carries a 1-based position."""

    def __init__(self, message, line=1, column=0):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnknownPropositionError(TwtlError):
    """Raised when a formula references a proposition outside the alphabet."""


class NormalizationError(TwtlError):
    """Raised when a negation cannot be pushed down to atomic propositions."""


class InfeasibleFormulaError(TwtlError):
    """Raised when a time window is too short for its enclosed task."""


class AmbiguityError(TwtlError):
    """Raised when a construction requires an unambiguous operand language."""


class BlockedRunError(TwtlError):
    """Raised when a word leaves the annotated automaton with no transition."""


class NoPolicyError(TwtlError):
    """Raised when no accepting trajectory exists for any finite relaxation."""
