"""Exception hierarchy shared by every module."""

from __future__ import annotations


class GraphmatError(Exception):
    """Base class for all package errors."""


class ParameterError(GraphmatError, ValueError):
    """A numeric parameter lies outside its admissible range."""


class DomainError(GraphmatError, ValueError):
    """An argument refers to a vertex or pair outside the valid domain."""


class ValidationError(GraphmatError, ValueError):
    """A shape or config description is malformed.

    ``element`` carries the offending piece of input when one can be named.
    """

    def __init__(self, message: str, element=None):
        super().__init__(message)
        self.element = element


class ShapeError(GraphmatError, ValueError):
    """Row/column tuple lengths do not match a shape's boundaries."""


class UnsupportedSizeError(GraphmatError):
    """A brute-force or dense routine was asked to exceed its size cap."""


class ClassificationError(GraphmatError, ValueError):
    """A shape does not belong to the class an operation requires."""


class EnumerationOverflowError(UnsupportedSizeError):
    """Ribbon enumeration produced more items than the configured cap."""


class ConfigError(GraphmatError, ValueError):
    """An experiment configuration is invalid."""
