"""Closed real intervals, possibly unbounded.

Super- and subdifferentials of one-dimensional concave/convex functions are
closed intervals; an endpoint of ``-inf``/``+inf`` marks an unbounded side.
"""

import math
from dataclasses import dataclass

from .exceptions import ValidationError


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]`` on the extended real line."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValidationError("Interval endpoints must not be NaN")
        if self.lo > self.hi:
            raise ValidationError(f"Empty interval [{self.lo}, {self.hi}]")

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    @property
    def width(self) -> float:
        if self.lo == self.hi:
            return 0.0
        return self.hi - self.lo

    def contains(self, value: float, tol: float = 0.0) -> bool:
        """Membership with an absolute slack ``tol``."""
        return self.lo - tol <= value <= self.hi + tol

    def distance(self, value: float) -> float:
        """Distance from ``value`` to the interval (0 inside)."""
        if value < self.lo:
            return self.lo - value
        if value > self.hi:
            return value - self.hi
        return 0.0

    def shifted(self, offset: float) -> "Interval":
        return Interval(self.lo + offset, self.hi + offset)

    def negated(self) -> "Interval":
        return Interval(-self.hi, -self.lo)
