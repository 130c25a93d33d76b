"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class ThetaError(Exception):
    """Base class for all errors raised by certtheta."""


class DomainError(ThetaError, ValueError):
    """An input lies outside the domain where the operation is defined."""


class PrecisionError(ThetaError):
    """The requested accuracy cannot be reached from the given inputs.

    ``achievable`` holds the number of bits that could be certified, when known.
    """

    def __init__(self, message: str, achievable: int | None = None):
        super().__init__(message)
        self.achievable = achievable


class AmbiguousBranch(ThetaError):
    """Both square roots are compatible with the anchor at the current radii."""


class BadSignPath(ThetaError):
    """A recorded square-root anchor does not match the sequence it is applied to."""


class NotGoodPosition(ThetaError):
    """No choice of square roots puts the values in an open quarter plane."""


class Indeterminate(ThetaError):
    """A predicate could not be decided at the current ball radii."""


class OutOfRadius(ThetaError):
    """A point lies outside the disk on which a followed mean is analytic."""


class SingularJacobian(ThetaError):
    """The finite-difference Jacobian cannot be certified invertible."""


class DivergentSchedule(ThetaError):
    """The Newton precision schedule does not increase."""


class OutsideBasin(ThetaError):
    """An evaluation point is not in the region where a scheme map is defined."""
