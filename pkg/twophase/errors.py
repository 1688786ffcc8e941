"""Exceptions raised by the twophase package.

Every error carries the exit code the command-line interface reports for it.
"""

from __future__ import annotations

from typing import Optional

__all__ = [
    "ConfigError",
    "CurveError",
    "DegenerateEndpointsError",
    "DisconnectedError",
    "Error",
    "ExperimentError",
    "GeometryError",
    "InfeasibleError",
    "InsufficientSamplesError",
    "ObstacleEndpointError",
    "ParameterError",
    "ResourceLimitError",
    "WindowError",
]


class Error(Exception):
    exit_code = 1


class ConfigError(Error):
    """Error in a run configuration file or its overrides."""

    def __init__(self, *args, line: Optional[int] = None):
        super().__init__(*args)
        self.line = line

    def __str__(self) -> str:
        error_str = super().__str__()
        if self.line is not None:
            error_str = f"line {self.line}: {error_str}"
        return error_str


class ParameterError(Error, ValueError):
    """Invalid metric or solver parameters."""


class GeometryError(Error, ValueError):
    """An inclusion shape that violates the admissibility rules."""


class CurveError(Error, ValueError):
    """A malformed path or a curve operation with invalid endpoints."""


class WindowError(Error, ValueError):
    """A grid window that does not cover the requested points."""


class InfeasibleError(Error):
    """No finite-length curve joins the requested endpoints."""

    exit_code = 2


class DisconnectedError(InfeasibleError):
    """The target is unreachable in the grid graph."""


class ObstacleEndpointError(InfeasibleError):
    """An endpoint lies strictly inside a hard obstacle."""


class ResourceLimitError(Error):
    """A computation would exceed the configured size limits."""

    exit_code = 3


class ExperimentError(Error):
    """An experiment cannot produce a meaningful result."""


class InsufficientSamplesError(ExperimentError):
    pass


class DegenerateEndpointsError(ExperimentError):
    pass
