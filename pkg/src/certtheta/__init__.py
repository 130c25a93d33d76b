"""Certified multiprecision evaluation of genus-1 and genus-2 theta functions."""

from __future__ import annotations

__version__ = "0.1.0"

from .ball import ComplexBall, Dyadic
from .errors import (AmbiguousBranch, BadSignPath, DivergentSchedule, DomainError, Indeterminate,
                     NotGoodPosition, OutOfRadius, OutsideBasin, PrecisionError, SingularJacobian,
                     ThetaError)
from .naive import Characteristic, PeriodPoint, theta_naive, theta_squares_naive

__all__ = [
    "__version__", "ComplexBall", "Dyadic", "Characteristic", "PeriodPoint", "theta_naive",
    "theta_squares_naive", "ThetaError", "DomainError", "PrecisionError", "AmbiguousBranch",
    "BadSignPath", "NotGoodPosition", "Indeterminate", "OutOfRadius", "SingularJacobian",
    "DivergentSchedule", "OutsideBasin",
]
