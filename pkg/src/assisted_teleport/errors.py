"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """A parameter lies outside the domain where an operation is defined."""


class LabelError(ValueError):
    """Register labels are missing, duplicated, or overlap."""


class IncompletePovmError(ValueError):
    """Measurement operators do not resolve the identity."""


class InfeasibleError(ValueError):
    """A conversion or protocol is not possible for the given parameters.

    Attributes:
        result: the evaluated feasibility record, when one is available.
    """

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class MatchingError(RuntimeError):
    """No perfect matching exists in a residual that should admit one."""
