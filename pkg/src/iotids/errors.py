"""Exception types shared across the toolkit."""

from __future__ import annotations


class IotIdsError(Exception):
    """Base class for every error raised by this package."""

    kind = "error"


class InvalidInputError(IotIdsError, ValueError):
    kind = "invalid-input"


class ConfigError(IotIdsError, ValueError):
    """A configuration value violates its contract."""

    kind = "config"

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ParseError(IotIdsError, ValueError):
    """A file could not be parsed. ``line`` is 1-based, or None for whole-file problems."""

    kind = "parse"

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class DivergenceError(IotIdsError, ArithmeticError):
    kind = "divergence"

    def __init__(self, epoch: int, message: str = "non-finite cost"):
        self.epoch = epoch
        super().__init__(f"{message} at epoch {epoch}")
