"""Exception hierarchy shared by every stage of the toolchain.

Each exception passes all of its constructor arguments to ``Exception``
so instances survive pickling across worker processes.
"""

from __future__ import annotations


class CascadeError(Exception):
    """Base class for all toolchain errors."""


class MalformedRecord(CascadeError):
    def __init__(self, line_number: int, cause: str):
        super().__init__(line_number, cause)
        self.line_number = line_number
        self.cause = cause

    def __str__(self) -> str:
        return f"malformed record at line {self.line_number}: {self.cause}"


# -- classification dictionary ---------------------------------------------


class DictionaryError(CascadeError):
    pass


class SchemaError(DictionaryError):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def __str__(self) -> str:
        return self.message


class DuplicateAnnotation(DictionaryError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"annotation {self.name!r} is classified more than once"


class UnknownDimensionValue(DictionaryError):
    def __init__(self, annotation: str, dimension: str, value: str):
        super().__init__(annotation, dimension, value)
        self.annotation = annotation
        self.dimension = dimension
        self.value = value

    def __str__(self) -> str:
        return (
            f"annotation {self.annotation!r}: {self.value!r} is not a known "
            f"{self.dimension} value"
        )


class DomainPurposeMismatch(DictionaryError):
    def __init__(self, annotation: str, purpose: str = "", knowledge_domain: str = ""):
        super().__init__(annotation, purpose, knowledge_domain)
        self.annotation = annotation
        self.purpose = purpose
        self.knowledge_domain = knowledge_domain

    def __str__(self) -> str:
        return (
            f"annotation {self.annotation!r}: knowledge domain "
            f"{self.knowledge_domain!r} is not legal for purpose {self.purpose!r}"
        )


# -- script front end --------------------------------------------------------


class ScriptSyntaxError(CascadeError):
    """A script failed to parse.  ``line`` and ``column`` are 1-based."""

    def __init__(self, line: int, column: int, message: str):
        super().__init__(line, column, message)
        self.line = line
        self.column = column
        self.message = message

    def __str__(self) -> str:
        return f"line {self.line}, column {self.column}: {self.message}"


class MissingFinalAction(ScriptSyntaxError):
    pass


class UnknownDirective(ScriptSyntaxError):
    pass


class UndefinedSetRef(ScriptSyntaxError):
    pass


# -- evaluation --------------------------------------------------------------


class TypeMismatch(CascadeError):
    def __init__(
        self,
        annotation: str,
        expected: str,
        found: str,
        step_index: int | None = None,
        record_id: str | None = None,
    ):
        super().__init__(annotation, expected, found, step_index, record_id)
        self.annotation = annotation
        self.expected = expected
        self.found = found
        self.step_index = step_index
        self.record_id = record_id

    def with_context(self, step_index: int, record_id: str) -> "TypeMismatch":
        return TypeMismatch(self.annotation, self.expected, self.found, step_index, record_id)

    def __str__(self) -> str:
        where = ""
        if self.step_index is not None:
            where = f"record {self.record_id!r}, step {self.step_index}: "
        return (
            f"{where}type mismatch on {self.annotation!r}: "
            f"expected {self.expected}, found {self.found}"
        )


class RecordNotFound(CascadeError):
    def __init__(self, record_id: str):
        super().__init__(record_id)
        self.record_id = record_id

    def __str__(self) -> str:
        return f"record {self.record_id!r} not found"


# -- tree transformation -----------------------------------------------------


class SimplificationUnsound(CascadeError):
    def __init__(self, counterexample: dict):
        super().__init__(counterexample)
        self.counterexample = counterexample

    def __str__(self) -> str:
        return f"simplified cascade diverges from its input at {self.counterexample!r}"


class DomainTooLarge(CascadeError):
    def __init__(self, points: int, cap: int):
        super().__init__(points, cap)
        self.points = points
        self.cap = cap

    def __str__(self) -> str:
        return f"input domain has {self.points} points, cap is {self.cap}"


class IncompleteDomain(CascadeError):
    def __init__(self, missing: list[str]):
        super().__init__(missing)
        self.missing = missing

    def __str__(self) -> str:
        return "no domain given for: " + ", ".join(self.missing)


class TreeFormatError(CascadeError):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def __str__(self) -> str:
        return self.message
