"""Structured errors for the PDDL front end and grounder.

Every malformed input must surface as a ``PddlError`` subclass; raw
exceptions escaping the parser are bugs (the fuzz suite enforces this).
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SourcePos:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


class PddlError(Exception):
    """Base class for all parse/ground/validate errors."""

    def __init__(self, message: str, pos: SourcePos | None = None):
        self.pos = pos
        if pos is not None:
            message = f"{pos}: {message}"
        super().__init__(message)


class LexError(PddlError):
    pass


class ParseError(PddlError):
    def __init__(self, message: str, pos: SourcePos | None = None, expected: tuple[str, ...] = ()):
        if expected:
            message = f"{message} (expected {' | '.join(expected)})"
        super().__init__(message, pos)
        self.expected = expected


class UnsupportedRequirement(PddlError):
    pass


class ArityError(PddlError):
    pass


class UnknownType(PddlError):
    pass


class UnknownPredicate(PddlError):
    pass


class UnknownFluent(PddlError):
    pass


class DomainMismatch(PddlError):
    pass


class UndeclaredObject(PddlError):
    pass


class CostFluentUndefined(PddlError):
    pass


class GroundingError(PddlError):
    pass


class ForeignAction(PddlError):
    """A plan step that does not name an action of the task at hand."""
