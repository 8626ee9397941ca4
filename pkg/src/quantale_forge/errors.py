"""Exception hierarchy shared by every module."""
from __future__ import annotations


class QFError(Exception):
    """Base class for all quantale-forge errors."""


class StructuralError(QFError):
    """An object refers to something that does not exist or has the wrong shape."""


class UsageError(QFError):
    """A check or construction was requested without the data it needs."""


class CapacityError(QFError):
    """A size guard was exceeded before an exhaustive enumeration."""


class AdjointUndefinedError(QFError):
    """A map does not preserve joins, so it has no right adjoint.

    ``witness`` is a subset S (as a tuple of labels) with f(⋁S) != ⋁f(S).
    """

    def __init__(self, message: str, witness: tuple = ()):
        super().__init__(message)
        self.witness = witness


class NotCoverableError(QFError):
    """Some arrow of a groupoid lies in no local bisection."""

    def __init__(self, message: str, arrow=None):
        super().__init__(message)
        self.arrow = arrow


class ParseError(QFError):
    """Syntax or semantic error in a structure-description file."""

    def __init__(self, message: str, line: int = 0, column: int = 0, obj: str = ""):
        where = f"line {line}, column {column}" if line else "input"
        if obj:
            where += f" (object {obj!r})"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.column = column
        self.obj = obj


class CoverDefectError(StructuralError):
    """A proposed cover does not give an injective embedding of frames."""

    def __init__(self, message: str, witness: tuple = ()):
        super().__init__(message)
        self.witness = witness
