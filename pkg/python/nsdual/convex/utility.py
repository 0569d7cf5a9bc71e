"""Utility families.

A utility is a concave, nondecreasing, nonconstant function ``U`` on the real
line (or on ``[-n, inf)`` after truncation). Each family evaluates ``U`` and
its superdifferential on numpy arrays and knows its Fenchel conjugate.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ErrorCode, ValidationError
from ..intervals import Interval
from .conjugate import (
    ArrayLike,
    ConjugateFunction,
    ExponentialConjugate,
    PiecewiseAffineConjugate,
    PowerShortfallConjugate,
    TruncatedConjugate,
)

Pieces = Tuple[np.ndarray, np.ndarray]


def _as_array(x: ArrayLike) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=float))


def _out(values: np.ndarray, like: ArrayLike):
    if np.ndim(like) == 0:
        return float(values[0])
    return values


class Utility(ABC):
    """Concave nondecreasing utility with an evaluable superdifferential."""

    family: str = "utility"

    @property
    def domain_left(self) -> float:
        """Left end of the (closed) domain, ``-inf`` for utilities on all of ℝ."""
        return -math.inf

    @abstractmethod
    def _value(self, x: np.ndarray) -> np.ndarray:
        """Vectorised U, ``-inf`` left of the domain."""

    @abstractmethod
    def _superdiff(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Vectorised ``(min ∂U, max ∂U)``; ``(+inf, +inf)`` left of the domain."""

    @property
    @abstractmethod
    def r(self) -> float:
        """``sup`` of all supergradients."""

    @property
    @abstractmethod
    def r_attained(self) -> bool:
        """Whether ``r`` is itself a supergradient somewhere."""

    @property
    @abstractmethod
    def satiation(self) -> float:
        """``L = inf{l : U(l) = U(inf)}``."""

    @property
    @abstractmethod
    def supremum(self) -> float:
        """``U(inf)``."""

    @abstractmethod
    def conjugate(self) -> ConjugateFunction:
        """Closed-form Fenchel conjugate."""

    @abstractmethod
    def describe(self) -> Dict[str, Any]:
        """Family tag and parameters, for reports."""

    def value(self, x: ArrayLike):
        """Evaluate U(x)."""
        arr = _as_array(x)
        with np.errstate(over="ignore", invalid="ignore"):
            return _out(self._value(arr), x)

    def superdiff_bounds(self, x: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
        """Superdifferential bounds ``(lo, hi)`` as arrays."""
        arr = _as_array(x)
        with np.errstate(over="ignore", invalid="ignore"):
            return self._superdiff(arr)

    def superdiff(self, x: float) -> Interval:
        """Closed interval ``[min ∂U(x), max ∂U(x)]``."""
        lo, hi = self.superdiff_bounds(x)
        return Interval(float(lo[0]), float(hi[0]))

    def slope(self, x: ArrayLike):
        """A finite supergradient choice: midpoint, or the finite endpoint."""
        lo, hi = self.superdiff_bounds(x)
        both = np.isfinite(lo) & np.isfinite(hi)
        out = np.where(both, 0.5 * (lo + hi), np.where(np.isfinite(lo), lo, hi))
        return _out(out, x)

    def affine_pieces(self) -> Optional[Pieces]:
        """``(c, s)`` with ``U(x) = min_j (c_j + s_j*x)`` on the domain, if piecewise linear."""
        return None

    @property
    def is_piecewise_linear(self) -> bool:
        return self.affine_pieces() is not None


class Exponential(Utility):
    """U(x) = -exp(-η x)."""

    family = "exponential"

    def __init__(self, eta: float = 1.0):
        if not eta > 0:
            raise ValidationError(
                "Exponential utility needs eta > 0",
                error_code=ErrorCode.INVALID_UTILITY,
                field="eta",
            )
        self.eta = float(eta)

    def _value(self, x: np.ndarray) -> np.ndarray:
        return -np.exp(-self.eta * x)

    def _superdiff(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        d = self.eta * np.exp(-self.eta * x)
        return d, d.copy()

    @property
    def r(self) -> float:
        return math.inf

    @property
    def r_attained(self) -> bool:
        return False

    @property
    def satiation(self) -> float:
        return math.inf

    @property
    def supremum(self) -> float:
        return 0.0

    def conjugate(self) -> ConjugateFunction:
        return ExponentialConjugate(self.eta)

    def describe(self) -> Dict[str, Any]:
        return {"family": self.family, "eta": self.eta}


class PowerShortfall(Utility):
    """U(x) = -c (x⁻)^p, the utility of a power shortfall loss."""

    family = "power_shortfall"

    def __init__(self, p: float, scale: float = 1.0):
        if not p > 1:
            raise ValidationError(
                "Power shortfall needs p > 1",
                error_code=ErrorCode.INVALID_UTILITY,
                field="p",
            )
        if not scale > 0:
            raise ValidationError(
                "Power shortfall needs a positive scale",
                error_code=ErrorCode.INVALID_UTILITY,
                field="scale",
            )
        self.p = float(p)
        self.scale = float(scale)

    def _value(self, x: np.ndarray) -> np.ndarray:
        return -self.scale * np.power(np.maximum(-x, 0.0), self.p)

    def _superdiff(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        d = self.scale * self.p * np.power(np.maximum(-x, 0.0), self.p - 1.0)
        return d, d.copy()

    @property
    def r(self) -> float:
        return math.inf

    @property
    def r_attained(self) -> bool:
        return False

    @property
    def satiation(self) -> float:
        return 0.0

    @property
    def supremum(self) -> float:
        return 0.0

    def conjugate(self) -> ConjugateFunction:
        return PowerShortfallConjugate(self.p, self.scale)

    def describe(self) -> Dict[str, Any]:
        return {"family": self.family, "p": self.p, "scale": self.scale}


class QuadraticShortfall(PowerShortfall):
    """U(x) = -(x⁻)², conjugate y²/4."""

    family = "quadratic_shortfall"

    def __init__(self) -> None:
        super().__init__(2.0, 1.0)

    def describe(self) -> Dict[str, Any]:
        return {"family": self.family}


class PiecewiseLinearConcave(Utility):
    """Piecewise-linear concave utility.

    ``breakpoints`` lists ``(x_i, s_i)`` with ``x_i`` increasing and ``s_i`` the
    slope immediately left of ``x_i``; slopes are positive and strictly
    decreasing. ``tail_slope`` applies right of the last breakpoint (zero means
    satiation at ``L = x_k``) and ``level`` fixes ``U(x_k)``.

    Example:
        ``PiecewiseLinearConcave([(0.0, 1.0)])`` is ``U(x) = -x⁻``.
    """

    family = "piecewise_linear"

    def __init__(
        self,
        breakpoints: Sequence[Tuple[float, float]],
        tail_slope: float = 0.0,
        level: float = 0.0,
    ):
        if len(breakpoints) == 0:
            raise ValidationError(
                "Piecewise-linear utility needs at least one breakpoint",
                error_code=ErrorCode.INVALID_UTILITY,
                field="breakpoints",
            )
        knots = np.array([float(b[0]) for b in breakpoints])
        slopes = np.array([float(b[1]) for b in breakpoints] + [float(tail_slope)])
        if np.any(np.diff(knots) <= 0):
            raise ValidationError(
                "Breakpoints must be strictly increasing",
                error_code=ErrorCode.INVALID_UTILITY,
                field="breakpoints",
            )
        if np.any(slopes[:-1] <= 0) or np.any(np.diff(slopes) >= 0) or slopes[-1] < 0:
            raise ValidationError(
                "Slopes must be positive and strictly decreasing, tail slope >= 0",
                error_code=ErrorCode.INVALID_UTILITY,
                field="breakpoints",
                details={"slopes": slopes.tolist()},
            )
        self.knots = knots
        self.slopes = slopes
        self.level = float(level)
        values = np.empty_like(knots)
        values[-1] = self.level
        for i in range(len(knots) - 2, -1, -1):
            values[i] = values[i + 1] - slopes[i + 1] * (knots[i + 1] - knots[i])
        self.knot_values = values

    @property
    def tail_slope(self) -> float:
        return float(self.slopes[-1])

    def affine_pieces(self) -> Optional[Pieces]:
        anchors_x = np.append(self.knots, self.knots[-1])
        anchors_u = np.append(self.knot_values, self.knot_values[-1])
        return anchors_u - self.slopes * anchors_x, self.slopes.copy()

    def _value(self, x: np.ndarray) -> np.ndarray:
        c, s = self.affine_pieces()
        return np.min(c[None, :] + s[None, :] * x[:, None], axis=1)

    def _superdiff(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        left = np.searchsorted(self.knots, x, side="left")
        right = np.searchsorted(self.knots, x, side="right")
        return self.slopes[right], self.slopes[left]

    @property
    def r(self) -> float:
        return float(self.slopes[0])

    @property
    def r_attained(self) -> bool:
        return True

    @property
    def satiation(self) -> float:
        return float(self.knots[-1]) if self.tail_slope == 0 else math.inf

    @property
    def supremum(self) -> float:
        return self.level if self.tail_slope == 0 else math.inf

    def conjugate(self) -> ConjugateFunction:
        return PiecewiseAffineConjugate(
            self.knot_values, -self.knots, lo=self.tail_slope, hi=float(self.slopes[0])
        )

    def describe(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "breakpoints": [[float(x), float(s)] for x, s in zip(self.knots, self.slopes[:-1])],
            "tail_slope": self.tail_slope,
            "level": self.level,
        }


class Shifted(Utility):
    """Uᵏ(x) = U(x - k1) + k2."""

    family = "shifted"

    def __init__(self, base: Utility, k1: float = 0.0, k2: float = 0.0):
        self.base = base
        self.k1 = float(k1)
        self.k2 = float(k2)

    @property
    def domain_left(self) -> float:
        return self.base.domain_left + self.k1

    def _value(self, x: np.ndarray) -> np.ndarray:
        return self.base._value(x - self.k1) + self.k2

    def _superdiff(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return self.base._superdiff(x - self.k1)

    @property
    def r(self) -> float:
        return self.base.r

    @property
    def r_attained(self) -> bool:
        return self.base.r_attained

    @property
    def satiation(self) -> float:
        return self.base.satiation + self.k1

    @property
    def supremum(self) -> float:
        return self.base.supremum + self.k2

    def affine_pieces(self) -> Optional[Pieces]:
        base = self.base.affine_pieces()
        if base is None:
            return None
        c, s = base
        return c - s * self.k1 + self.k2, s

    def conjugate(self) -> ConjugateFunction:
        return self.base.conjugate().shifted(self.k1, self.k2)

    def describe(self) -> Dict[str, Any]:
        return {"family": self.family, "base": self.base.describe(), "k1": self.k1, "k2": self.k2}


class Truncated(Utility):
    """U_n = U on ``[-n, inf)`` and ``-inf`` below."""

    family = "truncated"

    def __init__(self, base: Utility, n: float):
        if not n > 0:
            raise ValidationError(
                "Truncation level must be positive",
                error_code=ErrorCode.INVALID_UTILITY,
                field="n",
            )
        if base.domain_left >= -n:
            raise ValidationError(
                "Truncation level lies outside the base domain",
                error_code=ErrorCode.INVALID_UTILITY,
                details={"n": n, "domain_left": base.domain_left},
            )
        self.base = base
        self.n = float(n)

    @property
    def domain_left(self) -> float:
        return -self.n

    def _value(self, x: np.ndarray) -> np.ndarray:
        inside = x >= -self.n
        values = self.base._value(np.where(inside, x, -self.n))
        return np.where(inside, values, -np.inf)

    def _superdiff(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        lo, hi = self.base._superdiff(np.maximum(x, -self.n))
        hi = np.where(x <= -self.n, np.inf, hi)
        lo = np.where(x < -self.n, np.inf, lo)
        return lo, hi

    @property
    def r(self) -> float:
        return math.inf

    @property
    def r_attained(self) -> bool:
        return False

    @property
    def satiation(self) -> float:
        return max(self.base.satiation, -self.n)

    @property
    def supremum(self) -> float:
        return self.base.supremum

    def affine_pieces(self) -> Optional[Pieces]:
        return self.base.affine_pieces()

    @property
    def edge_value(self) -> float:
        return float(self.base.value(-self.n))

    def conjugate(self) -> ConjugateFunction:
        base_conj = self.base.conjugate()
        pieces = base_conj.pieces()
        if pieces is not None:
            a, b = pieces
            keep = b < self.n
            return PiecewiseAffineConjugate(
                np.append(a[keep], self.edge_value),
                np.append(b[keep], self.n),
                lo=base_conj.domain[0],
                hi=math.inf,
            )
        knee = float(self.base.superdiff_bounds(-self.n)[1][0])
        return TruncatedConjugate(base_conj, self.n, self.edge_value, knee)

    def describe(self) -> Dict[str, Any]:
        return {"family": self.family, "base": self.base.describe(), "n": self.n}
