"""Exception hierarchy shared by all modules.

The CLI maps ``ConfigError`` to exit code 2 and ``ResourceError`` to 3.
"""

from __future__ import annotations


class TcsynthError(Exception):
    pass


class ConfigError(TcsynthError):
    """Invalid configuration. ``line`` is 1-based when known."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.message = message
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class ResourceError(TcsynthError):
    """An input resource (word list, font, background) is missing or unusable."""
