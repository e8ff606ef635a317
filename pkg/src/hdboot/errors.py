"""Exception types raised across the package."""

from __future__ import annotations


class HDBootError(ValueError):
    """Base class for all package errors."""


class InvalidDataError(HDBootError):
    """Input data violates a shape or finiteness requirement."""


class DegenerateCoordinateError(HDBootError):
    """A coordinate has zero (or negative) scale where a positive one is needed."""

    def __init__(self, msg: str, index=None):
        super().__init__(msg)
        self.index = index


class WrongSchemeError(HDBootError):
    """A bootstrap scheme was used where it does not apply."""


class IndefiniteMatrixError(HDBootError):
    """A covariance matrix is not positive semidefinite within tolerance."""

    def __init__(self, msg: str, pivot: float | None = None):
        super().__init__(msg)
        self.pivot = pivot


class NonConvergenceError(HDBootError):
    """An iterative solver hit its iteration cap.

    The last iterate is kept on ``last`` so callers can inspect or reuse it.
    """

    def __init__(self, msg: str, last=None):
        super().__init__(msg)
        self.last = last


class ConfigError(HDBootError):
    """A scenario configuration is malformed."""
