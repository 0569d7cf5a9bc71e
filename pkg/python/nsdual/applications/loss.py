"""Convex nondecreasing loss functions on ``[0, inf)`` and their shortfall utilities."""

from abc import ABC, abstractmethod
from typing import Any, Dict, Sequence, Tuple, Union

import numpy as np

from ..convex.utility import PiecewiseLinearConcave, PowerShortfall, Utility
from ..exceptions import ErrorCode, ValidationError

ArrayLike = Union[float, np.ndarray]


class LossFunction(ABC):
    """Loss ``ℓ`` applied to the shortfall ``[B - X]⁺``."""

    family: str = "loss"

    @abstractmethod
    def _value(self, s: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def _subgradient(self, s: np.ndarray) -> np.ndarray:
        ...

    @property
    @abstractmethod
    def linear_near_infinity(self) -> bool:
        """Whether ``ℓ`` is affine on some ``[s0, inf)``."""

    @abstractmethod
    def utility(self) -> Utility:
        """``U(x) = -ℓ(x⁻)``."""

    @abstractmethod
    def describe(self) -> Dict[str, Any]:
        ...

    def value(self, s: ArrayLike):
        arr = np.maximum(np.atleast_1d(np.asarray(s, dtype=float)), 0.0)
        out = self._value(arr)
        return float(out[0]) if np.ndim(s) == 0 else out

    def subgradient(self, s: ArrayLike):
        """Right derivative of ``ℓ``."""
        arr = np.maximum(np.atleast_1d(np.asarray(s, dtype=float)), 0.0)
        out = self._subgradient(arr)
        return float(out[0]) if np.ndim(s) == 0 else out

    @property
    def at_zero(self) -> float:
        return float(self.value(0.0))

    def shape_ok(self, upper: float = 10.0, points: int = 41) -> bool:
        """Nondecreasing and convex on a sample grid of ``[0, upper]``."""
        grid = np.linspace(0.0, upper, points)
        values = np.asarray(self.value(grid))
        increments = np.diff(values)
        scale = 1e-10 * (1.0 + np.abs(values[1:]))
        return bool(np.all(increments >= -scale) and np.all(np.diff(increments) >= -scale[1:]))


class PowerLoss(LossFunction):
    """``ℓ(s) = c·s^p`` with ``p >= 1``."""

    family = "power"

    def __init__(self, p: float = 2.0, scale: float = 1.0):
        if p < 1:
            raise ValidationError("Power loss needs p >= 1", error_code=ErrorCode.INVALID_UTILITY, field="p")
        if not scale > 0:
            raise ValidationError("Power loss needs a positive scale", field="scale")
        self.p = float(p)
        self.scale = float(scale)

    def _value(self, s: np.ndarray) -> np.ndarray:
        return self.scale * s ** self.p

    def _subgradient(self, s: np.ndarray) -> np.ndarray:
        return self.scale * self.p * s ** (self.p - 1.0)

    @property
    def linear_near_infinity(self) -> bool:
        return self.p == 1.0

    def utility(self) -> Utility:
        if self.p > 1.0:
            return PowerShortfall(self.p, self.scale)
        return PiecewiseLinearConcave([(0.0, self.scale)], tail_slope=0.0, level=0.0)

    def describe(self) -> Dict[str, Any]:
        return {"family": self.family, "p": self.p, "scale": self.scale}


class PiecewiseLinearLoss(LossFunction):
    """Convex piecewise-linear loss.

    ``kinks`` lists ``(s_i, g_i)``: from ``s_i`` on the slope is ``g_i``. The first
    kink must be at 0 and slopes must be positive and strictly increasing.
    ``level`` is ``ℓ(0)``.
    """

    family = "piecewise_linear"

    def __init__(self, kinks: Sequence[Tuple[float, float]], level: float = 0.0):
        if not kinks:
            raise ValidationError("Piecewise-linear loss needs at least one kink", field="kinks")
        s = np.array([float(k[0]) for k in kinks])
        g = np.array([float(k[1]) for k in kinks])
        if s[0] != 0.0 or np.any(np.diff(s) <= 0):
            raise ValidationError(
                "Kinks must start at 0 and increase strictly", error_code=ErrorCode.INVALID_UTILITY, field="kinks"
            )
        if g[0] <= 0 or np.any(np.diff(g) <= 0):
            raise ValidationError(
                "Loss slopes must be positive and strictly increasing",
                error_code=ErrorCode.INVALID_UTILITY,
                field="kinks",
            )
        self.kinks = s
        self.slopes = g
        self.level = float(level)
        values = np.empty_like(s)
        values[0] = self.level
        for i in range(1, s.size):
            values[i] = values[i - 1] + g[i - 1] * (s[i] - s[i - 1])
        self.kink_values = values

    def _value(self, s: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.kinks, s, side="right") - 1
        return self.kink_values[idx] + self.slopes[idx] * (s - self.kinks[idx])

    def _subgradient(self, s: np.ndarray) -> np.ndarray:
        return self.slopes[np.searchsorted(self.kinks, s, side="right") - 1]

    @property
    def linear_near_infinity(self) -> bool:
        return True

    def utility(self) -> Utility:
        breakpoints = [(-float(si), float(gi)) for si, gi in zip(self.kinks[::-1], self.slopes[::-1])]
        return PiecewiseLinearConcave(breakpoints, tail_slope=0.0, level=-self.level)

    def describe(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "kinks": [[float(a), float(b)] for a, b in zip(self.kinks, self.slopes)],
            "level": self.level,
        }
