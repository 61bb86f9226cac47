"""Exception hierarchy shared by the library and the command line."""
from __future__ import annotations


class QndsimError(Exception):
    """Base class for package errors."""


class ConfigError(QndsimError):
    """Invalid configuration: bad syntax, unknown key or violated bound."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        self.line = line
        self.key = key
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class NumericalError(QndsimError):
    """A computation could not produce a meaningful result."""
