"""Exception hierarchy.

Every error a user can trigger with bad input derives from :class:`FdEvalError`
and maps to CLI exit status 1. :class:`InvariantViolation` signals a bug in this
package and maps to exit status 2.
"""

from __future__ import annotations

from typing import Sequence


class FdEvalError(Exception):
    exit_code = 1


class IoError(FdEvalError):
    """A dump or report file could not be read or written."""


class FormatError(FdEvalError):
    """A file row could not be parsed.

    ``line`` is the 1-based physical line number in the offending file.
    """

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}: " if path is not None else f"line {line}: "
        elif where:
            where += " "
        super().__init__(f"{where}{message}")


class ValidationError(FdEvalError, ValueError):
    """Parsed data violates a prediction-set invariant.

    ``indices`` holds the 0-based record indices that failed, when known.
    """

    def __init__(self, message: str, indices: Sequence[int] = ()):
        self.indices = tuple(int(i) for i in indices)
        super().__init__(message)


class MarginUndefined(FdEvalError, ValueError):
    pass


class LengthMismatch(FdEvalError, ValueError):
    pass


class NonFiniteScore(FdEvalError, ValueError):
    pass


class EmptySet(FdEvalError, ValueError):
    pass


class InvalidCounts(FdEvalError, ValueError):
    pass


class CoverageOutOfRange(FdEvalError, ValueError):
    pass


class CurveMismatch(FdEvalError, ValueError):
    pass


class ConfigError(FdEvalError, ValueError):
    pass


class TooFewModels(FdEvalError, ValueError):
    pass


class EmptyPlot(FdEvalError, ValueError):
    pass


class InvariantViolation(FdEvalError, AssertionError):
    exit_code = 2
