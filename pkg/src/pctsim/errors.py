"""Exception types shared across the package."""

from __future__ import annotations


class PctsimError(Exception):
    """Base class for all package-specific errors."""


class ModelInconsistentError(PctsimError):
    """An explicit rule key matched a past but contradicts the tree structure."""


class NoRuleError(PctsimError):
    """A context resolved structurally but no transition rule covers it."""


class NegativeWidthError(PctsimError):
    """A regular symbol has probability below epsilon, so its interval is negative."""


class IndexNotCoveredError(PctsimError):
    """A fixed trace was queried outside the indices it covers."""

    def __init__(self, index: int):
        super().__init__(f"fixed trace does not cover index {index}")
        self.index = index


class AbortedError(PctsimError):
    """The backward search exceeded its step guard before regenerating.

    Either the termination condition fails for this model or max_back is
    too small for the realization at hand.
    """

    def __init__(self, start: int, reached: int, max_back: int):
        super().__init__(
            f"backward search from {start} aborted at {reached} (max_back={max_back})"
        )
        self.start = start
        self.reached = reached
        self.max_back = max_back


class OracleUnsupportedError(PctsimError):
    """The enumeration oracle cannot handle this model shape."""


class ParseError(PctsimError):
    """Model document syntax error, with 1-based location."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, col {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class SemanticError(PctsimError):
    """Model document parsed but the resulting model violates an invariant."""

    def __init__(self, violations):
        codes = ", ".join(v.code for v in violations)
        super().__init__(f"model invalid: {codes}")
        self.violations = list(violations)
