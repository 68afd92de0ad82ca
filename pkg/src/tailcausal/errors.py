"""Exception types shared across the package.

Plain ``ValueError`` is used for bad arguments and domain violations; the
classes here mark failure modes callers may want to catch separately
(thin samples, optimizer breakdown, unreadable input files).
"""


class TailCausalError(Exception):
    """Base class for package-specific errors."""


class SampleSizeError(TailCausalError):
    """Too few observations for the requested estimate."""


class FitError(TailCausalError):
    """An estimation routine failed to produce a usable fit."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ParseError(TailCausalError):
    """Malformed input file. Carries the offending line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NumericError(TailCausalError):
    """A numeric routine left its validity envelope (overflow, NaN, ...)."""
