"""Exception hierarchy shared by every layer.

Each error carries a stable machine code (the same codes the HTTP service
returns in ApiError bodies) plus an optional location string such as
"pattern 'x', transformation 2" or a character offset in a DSL string.
"""

from __future__ import annotations


class PatternForgeError(Exception):
    """Base class; `code` is a stable machine string."""

    code = "ERROR"

    def __init__(self, message: str, location: str | None = None):
        self.message = message
        self.location = location
        super().__init__(message if location is None else f"{location}: {message}")


class ParseError(PatternForgeError):
    code = "PARSE_ERROR"

    def __init__(self, message: str, position: int | None = None, text: str | None = None):
        self.position = position
        self.text = text
        loc = None
        if position is not None:
            loc = f"at {position}"
            if text:
                snippet = text[position:position + 12]
                loc = f"at {position} near {snippet!r}"
        super().__init__(message, loc)


class TypeMismatch(PatternForgeError):
    code = "TYPE_MISMATCH"


class UnknownAttribute(PatternForgeError):
    code = "UNKNOWN_ATTRIBUTE"


class UnknownFunction(PatternForgeError):
    code = "UNKNOWN_FUNCTION"


class UnknownPattern(PatternForgeError):
    code = "UNKNOWN_PATTERN"


class DivisionByZero(PatternForgeError):
    code = "DIVISION_BY_ZERO"


class ArityMismatch(PatternForgeError):
    code = "ARITY_MISMATCH"


class TableDomainError(PatternForgeError):
    code = "TABLE_DOMAIN"


class ParallelWriteConflict(PatternForgeError):
    code = "PARALLEL_CONFLICT"


class IterationLimitExceeded(PatternForgeError):
    code = "ITERATION_LIMIT"


class DuplicateId(PatternForgeError):
    code = "DUPLICATE_ID"


class BadRefinesTarget(PatternForgeError):
    code = "BAD_REFINES_TARGET"


class BadPath(PatternForgeError):
    code = "BAD_PATH"


class RefinementMismatch(PatternForgeError):
    code = "REFINEMENT_MISMATCH"


class MultipleErrors(PatternForgeError):
    """Aggregate raised when validation finds more than one violation.

    Single violations are raised directly as their specific class; this
    wrapper exists so loaders can report every problem in one pass.
    """

    code = "VALIDATION_ERROR"

    def __init__(self, errors: list[PatternForgeError]):
        self.errors = list(errors)
        lines = "; ".join(str(e) for e in self.errors)
        super().__init__(f"{len(self.errors)} violations: {lines}")


def raise_collected(errors: list[PatternForgeError]) -> None:
    """Raise the single collected error, or MultipleErrors for several."""
    if not errors:
        return
    if len(errors) == 1:
        raise errors[0]
    raise MultipleErrors(errors)
