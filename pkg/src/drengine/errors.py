"""Exception hierarchy shared by all engine modules.

The CLI maps these onto exit statuses: domain errors exit with 2,
certification failures with 3.
"""

from __future__ import annotations


class DrEngineError(Exception):
    """Base class for every error raised deliberately by the engine."""


class DomainError(DrEngineError, ValueError):
    """Input outside the domain of an operation."""


class StructuralError(DomainError):
    """Malformed graph data (maps not total, dangling ids, ...)."""


class CertificationError(DrEngineError):
    """A polynomiality certificate could not be produced."""


class NotYetPolynomialError(CertificationError):
    """Interpolation did not stabilize within the configured bounds.

    ``best`` carries the last candidate polynomial (or ``None``).
    """

    def __init__(self, message: str, best=None, certificate=None):
        super().__init__(message)
        self.best = best
        self.certificate = certificate or {}


class DesignError(CertificationError):
    """Sample design does not determine a unique interpolant."""


class NotPolynomialError(CertificationError):
    """A fitted polynomial failed to predict held-out samples."""

    def __init__(self, message: str, best=None, mismatches=None):
        super().__init__(message)
        self.best = best
        self.mismatches = mismatches or []
