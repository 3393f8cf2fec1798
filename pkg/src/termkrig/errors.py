"""Exception hierarchy shared across the package.

Each class maps to one CLI exit code (see :mod:`termkrig.cli`), so raising
the right type is part of the public contract, not just diagnostics.
"""


class TermkrigError(Exception):
    """Base class for all package errors."""


class QuoteParseError(TermkrigError):
    """Input file cannot be read or a row is malformed (exit code 2)."""


class ValidationError(QuoteParseError):
    """A row parses but violates a quote invariant, e.g. bid > ask (exit code 2)."""


class InfeasibleMarketError(TermkrigError):
    """The quoted bid/ask system admits no arbitrage-free curve (exit code 3).

    ``quote_ids`` names a subset of quotes whose removal restores feasibility.
    """

    def __init__(self, message: str, quote_ids: tuple[str, ...] = ()):
        super().__init__(message)
        self.quote_ids = quote_ids


class NumericalError(TermkrigError):
    """A factorization or optimization failed to reach its tolerance (exit code 4)."""


class ConfigError(TermkrigError):
    """Invalid run configuration or unusable model inputs (exit code 5)."""


class CoverageError(ConfigError):
    """A requested delivery month lies outside the model grid (exit code 5)."""
