"""Exception hierarchy shared by all pathsense modules."""

from __future__ import annotations

__all__ = [
    "PathSenseError",
    "ParameterError",
    "ValidationError",
    "StateError",
    "MetricUndefinedError",
    "ParseError",
    "ProtocolError",
]


class PathSenseError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(PathSenseError, ValueError):
    """A configuration or parameter value is out of range; message names the field."""


class ValidationError(PathSenseError, ValueError):
    """Structured data violates an invariant (shape, range, ordering)."""


class StateError(PathSenseError, RuntimeError):
    """Operation invoked in a lifecycle phase that does not permit it."""


class MetricUndefinedError(PathSenseError, ValueError):
    """The requested metric has no defined value for the given inputs."""


class ParseError(PathSenseError, ValueError):
    """Malformed file or stream input.

    ``line`` is the 1-based line number when the source is line-oriented,
    else None.
    """

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ProtocolError(PathSenseError, ValueError):
    """A wire message violates the session protocol."""
