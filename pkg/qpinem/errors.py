#!/usr/bin/env python3
"""
Exception hierarchy for qpinem.

All errors derive from ValueError so callers that only guard against
bad input values keep working.
"""

from typing import Optional


class QpinemError(ValueError):
    """Base class for every error raised by qpinem."""


class DomainError(QpinemError):
    """A physical parameter is outside its allowed domain."""


class NumericalError(QpinemError):
    """A computation cannot be carried out reliably on the truncated spaces."""


class TruncationError(NumericalError):
    """The Fock truncation is too small for the requested state or index."""


class ZeroProbabilityError(NumericalError):
    """A post-selected measurement branch has (numerically) zero probability."""


class OutOfWindowError(QpinemError):
    """An electron energy index falls outside its window."""


class FitError(QpinemError):
    """A statistics fit has too little data."""


class UndefinedStatisticError(QpinemError):
    """A statistic is undefined for the given distribution."""


class ConfigError(QpinemError):
    """A scenario document violates the configuration schema."""

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class IncompleteRunError(QpinemError):
    """A stochastic run stopped before reaching its goal."""
