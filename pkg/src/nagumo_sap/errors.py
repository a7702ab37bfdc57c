"""Exception hierarchy.

Validation-type errors map to CLI exit code 2, numerical failures to 3.
"""

from __future__ import annotations


class NagumoError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class ValidationError(NagumoError, ValueError):
    exit_code = 2


class DomainError(ValidationError):
    """Input outside the mathematical domain of an operation."""


class NoHomoclinic(DomainError):
    pass


class ThresholdViolation(ValidationError):
    pass


class InvalidItinerary(ValidationError):
    pass


class ConstructionError(NagumoError):
    pass


class NumericalFailure(NagumoError):
    exit_code = 3


class IntegrationError(NumericalFailure):
    pass


class AngleUndefined(NumericalFailure):
    pass


class AmbiguousTurnCount(NumericalFailure):
    def __init__(self, msg: str, diagnostics: dict | None = None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class QNotFound(NumericalFailure):
    pass


class GeometryError(NumericalFailure):
    pass


class PathError(NumericalFailure):
    pass


class Inconclusive(NumericalFailure):
    pass


class RealizationFailed(NumericalFailure):
    def __init__(self, msg: str, interval=None, stage: int | None = None):
        super().__init__(msg)
        self.interval = interval
        self.stage = stage


class FixedPointNotFound(NumericalFailure):
    pass


class LocalizationError(NumericalFailure):
    pass


class ConnectionNotFound(NumericalFailure):
    pass
