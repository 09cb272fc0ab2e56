"""Shared exception types."""

from __future__ import annotations


class RaspError(Exception):
    """Base class for all errors raised by this package."""


class CapacityError(RaspError):
    """A program, input vector, or batch does not fit the declared resources."""


class LangError(RaspError):
    """Lexical or syntactic error in array-language source.

    Carries the token offset (in characters for lexical errors, in tokens
    for parse errors) so callers can point at the problem.
    """

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at offset {pos})")
        self.message = message
        self.pos = pos


class EmptyLanguageError(RaspError):
    """No program of the requested token length exists."""


class EnumerationLimitError(RaspError):
    """Enumeration refused because the language at this length is too large."""
