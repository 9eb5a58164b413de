"""Exception hierarchy.

Every error carries a short machine-readable ``code`` so the command line
front-end can map it to an exit status and a stable diagnostic line.
"""

from __future__ import annotations


class S4prError(Exception):
    """Base class for all domain errors raised by this package."""

    code = "ERROR"

    def __init__(self, message: str, code: str | None = None) -> None:
        super().__init__(message)
        if code is not None:
            self.code = code


class NetStructureError(S4prError, ValueError):
    code = "STRUCTURE"


class MarkingError(S4prError, ValueError):
    code = "BAD_MARKING"


class NotEnabledError(S4prError):
    code = "NOT_ENABLED"


class CapacityError(S4prError):
    """Reachability exploration exceeded its node cap."""

    code = "NODE_CAP"


class InadmissibleMarkingError(S4prError):
    code = "INADMISSIBLE"


class ControllabilityError(S4prError):
    code = "UNCONTROLLABLE"


class ArgumentError(S4prError, ValueError):
    code = "BAD_ARGUMENT"


class ProjectionError(S4prError):
    code = "PROJECTION"


class UnseparableError(S4prError):
    code = "UNSEPARABLE"

    def __init__(self, message: str, uncovered=()) -> None:
        super().__init__(message)
        self.uncovered = tuple(uncovered)


class ScenarioError(S4prError, ValueError):
    code = "SCENARIO"


class ParseError(S4prError):
    """Malformed input document (as opposed to a well-formed but invalid net)."""

    code = "PARSE"

    def __init__(self, message: str, line: int | None = None, column: int | None = None) -> None:
        if line is not None:
            message = f"line {line} column {column}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column
