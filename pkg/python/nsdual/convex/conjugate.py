"""Fenchel conjugates of utility functions.

For a concave nondecreasing utility U the conjugate is the convex function
``Ũ(y) = sup_x (U(x) - x*y)``. Every implementation evaluates Ũ and an
*extended* subdifferential on numpy arrays:

* below the effective domain the extended subdifferential is ``(-inf, -inf)``,
* above it ``(+inf, +inf)``,
* at a closed domain edge the outward side is unbounded.

The extended form keeps the proximal bisection in :mod:`nsdual.moreau`
monotone across domain edges. The public :meth:`ConjugateFunction.subdiff`
only answers inside ``[0, r)`` and raises :class:`DomainError` elsewhere.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import TYPE_CHECKING, Optional, Tuple, Union

import numpy as np
from scipy.special import wrightomega

from ..exceptions import DomainError, ValidationError
from ..intervals import Interval
from ..logging import get_logger

if TYPE_CHECKING:
    from ..config import NsDualSettings
    from .utility import Utility

ArrayLike = Union[float, np.ndarray]
Pieces = Tuple[np.ndarray, np.ndarray]


def _as_array(y: ArrayLike) -> np.ndarray:
    return np.atleast_1d(np.asarray(y, dtype=float))


def _out(values: np.ndarray, like: ArrayLike):
    if np.ndim(like) == 0:
        return float(values[0])
    return values


class ConjugateFunction(ABC):
    """Convex conjugate Ũ with its closed effective domain ``[lo, hi]``."""

    closed_form: bool = True

    @property
    @abstractmethod
    def domain(self) -> Tuple[float, float]:
        """Closed effective domain ``(lo, hi)``; ``hi`` may be ``inf``."""

    @property
    def r(self) -> float:
        """Right end of the domain, ``sup`` of the utility's slopes."""
        return self.domain[1]

    @abstractmethod
    def _value(self, y: np.ndarray) -> np.ndarray:
        """Vectorised Ũ, ``+inf`` outside the domain."""

    @abstractmethod
    def _subdiff(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Vectorised extended subdifferential bounds."""

    def value(self, y: ArrayLike):
        """Evaluate Ũ(y) (``+inf`` outside the domain)."""
        arr = _as_array(y)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            return _out(self._value(arr), y)

    def subdiff_bounds(self, y: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
        """Extended subdifferential ``(lo, hi)`` arrays for every ``y``."""
        arr = _as_array(y)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            return self._subdiff(arr)

    def derivative(self, y: ArrayLike):
        """A finite subgradient choice: midpoint, or the finite endpoint."""
        lo, hi = self.subdiff_bounds(y)
        mid = np.where(np.isfinite(lo) & np.isfinite(hi), 0.5 * (lo + hi), np.nan)
        mid = np.where(np.isfinite(lo) & ~np.isfinite(hi), lo, mid)
        mid = np.where(~np.isfinite(lo) & np.isfinite(hi), hi, mid)
        return _out(mid, y)

    def subdiff(self, y: float) -> Interval:
        """Closed interval ``∂Ũ(y)`` for ``y`` in ``[0, r)``.

        At ``y = 0`` the interval is the half-line ``(-inf, -L]`` where ``L`` is
        the satiation level of the utility.

        Raises:
            DomainError: If ``y < 0``, ``y >= r`` or Ũ(y) is not finite
        """
        y = float(y)
        if y < 0 or y >= self.r or not math.isfinite(self.value(y)):
            raise DomainError(
                f"y={y} outside the conjugate domain [0, {self.r})",
                details={"y": y, "r": self.r},
            )
        lo, hi = self.subdiff_bounds(y)
        return Interval(float(lo[0]), float(hi[0]))

    def pieces(self) -> Optional[Pieces]:
        """Affine pieces ``(a, b)`` with Ũ = max(a + b*y) on the domain, if any."""
        return None

    def prox(self, y: np.ndarray, n: float, beta: float) -> Optional[np.ndarray]:
        """Closed-form minimiser of ``Ũ(z) - βz + (n/2)(y - z)²`` over ``z >= 0``, if known."""
        return None

    def shifted(self, k1: float, k2: float) -> "ConjugateFunction":
        """Conjugate of ``U(x - k1) + k2``: ``Ũ(y) - k1*y + k2``."""
        if k1 == 0.0 and k2 == 0.0:
            return self
        return ShiftedConjugate(self, k1, k2)

    def describe(self) -> dict:
        lo, hi = self.domain
        return {"type": type(self).__name__, "domain": [lo, hi], "closed_form": self.closed_form}


class ExponentialConjugate(ConjugateFunction):
    """Ũ(y) = (y/η)(ln(y/η) - 1), Ũ(0) = 0."""

    def __init__(self, eta: float):
        self.eta = float(eta)

    @property
    def domain(self) -> Tuple[float, float]:
        return (0.0, math.inf)

    def _value(self, y: np.ndarray) -> np.ndarray:
        s = y / self.eta
        out = np.where(y > 0, s * (np.log(np.where(y > 0, s, 1.0)) - 1.0), 0.0)
        return np.where(y < 0, np.inf, out)

    def _subdiff(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        d = np.where(y > 0, np.log(np.where(y > 0, y, 1.0) / self.eta) / self.eta, -np.inf)
        return d, d.copy()

    def prox(self, y: np.ndarray, n: float, beta: float) -> Optional[np.ndarray]:
        # w = ηnz solves w + ln w = ln(η²n) + η(β + ny)
        u = math.log(self.eta ** 2 * n) + self.eta * (beta + n * y)
        return np.real(wrightomega(u)) / (self.eta * n)


class PowerShortfallConjugate(ConjugateFunction):
    """Conjugate of ``-c*(x^-)^p``: ``(p-1)*c*t^p`` with ``t = (y/(c*p))^(1/(p-1))``."""

    def __init__(self, p: float, scale: float = 1.0):
        self.p = float(p)
        self.scale = float(scale)

    @property
    def domain(self) -> Tuple[float, float]:
        return (0.0, math.inf)

    def _t(self, y: np.ndarray) -> np.ndarray:
        return np.power(np.maximum(y, 0.0) / (self.scale * self.p), 1.0 / (self.p - 1.0))

    def _value(self, y: np.ndarray) -> np.ndarray:
        t = self._t(y)
        out = (self.p - 1.0) * self.scale * np.power(t, self.p)
        return np.where(y < 0, np.inf, out)

    def _subdiff(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        t = self._t(y)
        lo = np.where(y > 0, t, -np.inf)
        hi = np.where(y > 0, t, np.where(y == 0, 0.0, -np.inf))
        return lo, hi

    def prox(self, y: np.ndarray, n: float, beta: float) -> Optional[np.ndarray]:
        s = np.maximum(beta + n * y, 0.0)
        c = self.scale
        if self.p == 2.0:
            return s / (n + 0.5 / c)
        if self.p == 1.5:
            a = 1.0 / (1.5 * c) ** 2
            return 2.0 * s / (n + np.sqrt(n * n + 4.0 * a * s))
        return None


class PiecewiseAffineConjugate(ConjugateFunction):
    """Ũ(y) = max_i (a_i + b_i*y) on ``[lo, hi]``, ``+inf`` outside.

    Conjugates of piecewise-linear utilities have this form exactly, with one
    piece per breakpoint ``x_i`` (``a_i = U(x_i)``, ``b_i = -x_i``).
    """

    def __init__(self, intercepts, slopes, lo: float, hi: float):
        a = np.asarray(intercepts, dtype=float).ravel()
        b = np.asarray(slopes, dtype=float).ravel()
        if a.size == 0 or a.shape != b.shape:
            raise ValidationError("Piecewise-affine conjugate needs matching non-empty pieces")
        if not lo <= hi:
            raise ValidationError(f"Empty conjugate domain [{lo}, {hi}]")
        self.a = a
        self.b = b
        self.lo = float(lo)
        self.hi = float(hi)

    @property
    def domain(self) -> Tuple[float, float]:
        return (self.lo, self.hi)

    def pieces(self) -> Optional[Pieces]:
        return self.a.copy(), self.b.copy()

    def shifted(self, k1: float, k2: float) -> "ConjugateFunction":
        return PiecewiseAffineConjugate(self.a + k2, self.b - k1, self.lo, self.hi)

    def _envelope(self, y: np.ndarray) -> np.ndarray:
        return self.a[None, :] + self.b[None, :] * y[:, None]

    def _value(self, y: np.ndarray) -> np.ndarray:
        vals = np.max(self._envelope(y), axis=1)
        inside = (y >= self.lo) & (y <= self.hi)
        return np.where(inside, vals, np.inf)

    def _subdiff(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        env = self._envelope(y)
        top = np.max(env, axis=1, keepdims=True)
        active = env >= top - 1e-12 * (1.0 + np.abs(top))
        b = np.broadcast_to(self.b, env.shape)
        lo = np.min(np.where(active, b, np.inf), axis=1)
        hi = np.max(np.where(active, b, -np.inf), axis=1)
        lo = np.where(y <= self.lo, -np.inf, lo)
        hi = np.where(y >= self.hi, np.inf, hi)
        lo = np.where(y > self.hi, np.inf, lo)
        hi = np.where(y < self.lo, -np.inf, hi)
        return lo, hi


class ShiftedConjugate(ConjugateFunction):
    """Ũᵏ(y) = Ũ(y) - k1*y + k2, ∂Ũᵏ = ∂Ũ - k1."""

    def __init__(self, base: ConjugateFunction, k1: float, k2: float):
        self.base = base
        self.k1 = float(k1)
        self.k2 = float(k2)
        self.closed_form = base.closed_form

    @property
    def domain(self) -> Tuple[float, float]:
        return self.base.domain

    def pieces(self) -> Optional[Pieces]:
        base = self.base.pieces()
        if base is None:
            return None
        return base[0] + self.k2, base[1] - self.k1

    def _value(self, y: np.ndarray) -> np.ndarray:
        v = self.base._value(y)
        return np.where(np.isfinite(v), v - self.k1 * y + self.k2, v)

    def _subdiff(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        lo, hi = self.base._subdiff(y)
        return lo - self.k1, hi - self.k1

    def prox(self, y: np.ndarray, n: float, beta: float) -> Optional[np.ndarray]:
        return self.base.prox(y, n, beta + self.k1)


class TruncatedConjugate(ConjugateFunction):
    """Conjugate of a utility truncated to ``[-n, inf)``.

    Equal to the base conjugate up to ``knee = max ∂U(-n)`` and continued by the
    affine function ``U(-n) + n*y`` beyond.
    """

    def __init__(self, base: ConjugateFunction, n: float, edge_value: float, knee: float):
        self.base = base
        self.n = float(n)
        self.edge_value = float(edge_value)
        self.knee = float(knee)
        self.closed_form = base.closed_form

    @property
    def domain(self) -> Tuple[float, float]:
        return (self.base.domain[0], math.inf)

    def _value(self, y: np.ndarray) -> np.ndarray:
        below = np.minimum(y, self.knee)
        base = self.base._value(below)
        return np.where(y <= self.knee, base, self.edge_value + self.n * y)

    def _subdiff(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        lo, hi = self.base._subdiff(np.minimum(y, self.knee))
        at_knee = y == self.knee
        lo = np.where(y > self.knee, self.n, lo)
        hi = np.where(y > self.knee, self.n, np.where(at_knee, self.n, hi))
        return lo, hi

    def prox(self, y: np.ndarray, n: float, beta: float) -> Optional[np.ndarray]:
        below = self.base.prox(y, n, beta)
        if below is None:
            return None
        affine = np.maximum(y + (beta - self.n) / n, self.knee)
        return np.where(below <= self.knee, below, affine)


class NumericConjugate(ConjugateFunction):
    """Conjugate computed from the utility's superdifferential alone.

    For each ``y`` the maximisers of ``U(x) - x*y`` form the interval
    ``[x_lo, x_hi]`` where ``x_lo = inf{x : min ∂U(x) <= y}`` and
    ``x_hi = sup{x : max ∂U(x) >= y}``; both are found by bisection on the
    monotone superdifferential.
    """

    closed_form = False

    def __init__(self, utility: "Utility", settings: Optional["NsDualSettings"] = None):
        from ..config import get_settings

        self.utility = utility
        self.settings = settings or get_settings()
        self.logger = get_logger("convex.numeric_conjugate")
        self._cap = 2.0 ** self.settings.r_detection_cap_exponent
        self._r, self._r_attained = self._detect_r()
        self._lo = self._detect_lower_edge()
        if not self._r > 0:
            raise ValidationError(
                "Malformed utility: r <= 0", details={"r": self._r, "family": utility.family}
            )
        self.logger.debug(
            "Built numeric conjugate",
            family=utility.family,
            r=self._r,
            r_attained=self._r_attained,
        )

    def _bounds(self, x: float) -> Tuple[float, float]:
        lo, hi = self.utility.superdiff_bounds(np.array([x]))
        return float(lo[0]), float(hi[0])

    def _detect_r(self) -> Tuple[float, bool]:
        """Extrapolate ``min ∂U(x)`` along ``x = -2^k``.

        ``r`` is attained when U is affine with slope ``r`` on the last step.
        """
        if math.isfinite(self.utility.domain_left):
            return math.inf, False
        tol = self.settings.tol_conj_numeric
        previous = self._bounds(-1.0)[0]
        for k in range(1, self.settings.r_detection_cap_exponent + 1):
            lo, hi = self._bounds(-(2.0 ** k))
            if not math.isfinite(lo):
                return math.inf, False
            flat = hi - lo <= tol * (1.0 + abs(lo))
            if flat and abs(lo - previous) <= tol * (1.0 + abs(lo)):
                step = 2.0 ** (k - 1)
                secant = (self.utility.value(-step) - self.utility.value(-2.0 * step)) / step
                return lo, abs(float(secant) - lo) <= tol * (1.0 + abs(lo))
            previous = lo
        return math.inf, False

    def _detect_lower_edge(self) -> float:
        return max(0.0, self._bounds(self._cap)[0])

    @property
    def domain(self) -> Tuple[float, float]:
        return (self._lo, self._r)

    def _bisect(self, predicate, left: float, right: float) -> float:
        """Boundary between ``predicate`` False (left) and True (right)."""
        tol = self.settings.tol_conj_numeric * 1e-4
        for _ in range(400):
            if right - left <= tol * (1.0 + abs(left) + abs(right)):
                break
            mid = 0.5 * (left + right)
            if predicate(mid):
                right = mid
            else:
                left = mid
        return 0.5 * (left + right)

    def maximizers(self, y: float) -> Tuple[float, float]:
        """Maximiser interval ``[x_lo, x_hi]`` of ``U(x) - x*y`` (may be infinite)."""
        dom_left = self.utility.domain_left
        cap = self._cap

        def low_ok(x: float) -> bool:
            return self._bounds(x)[0] <= y

        def high_ok(x: float) -> bool:
            return self._bounds(x)[1] >= y

        # x_lo: first x where min ∂U(x) <= y
        right = 1.0
        while not low_ok(right) and right < cap:
            right *= 2.0
        if not low_ok(right):
            x_lo = math.inf
        else:
            left = min(0.0, right) - 1.0
            while low_ok(left) and left > -cap and left > dom_left:
                left *= 2.0
            if math.isfinite(dom_left) and left <= dom_left:
                left = dom_left
                x_lo = dom_left if low_ok(dom_left) else self._bisect(low_ok, left, right)
            elif low_ok(left):
                x_lo = -math.inf
            else:
                x_lo = self._bisect(low_ok, left, right)

        # x_hi: last x where max ∂U(x) >= y
        left = -1.0 if not math.isfinite(dom_left) else max(dom_left, -1.0)
        while not high_ok(left) and left > -cap and left > dom_left:
            left *= 2.0
        if math.isfinite(dom_left) and left < dom_left:
            left = dom_left
        if not high_ok(left):
            x_hi = -math.inf
        else:
            right = max(1.0, left + 1.0)
            while high_ok(right) and right < cap:
                right *= 2.0
            if high_ok(right):
                x_hi = math.inf
            else:
                x_hi = self._bisect(lambda x: not high_ok(x), left, right)
        return x_lo, x_hi

    def _value_scalar(self, y: float) -> float:
        if y < 0:
            return math.inf
        x_lo, x_hi = self.maximizers(y)
        if x_lo == -math.inf and x_hi == -math.inf:
            return math.inf
        if math.isfinite(x_lo):
            x = x_lo
        elif math.isfinite(x_hi):
            x = x_hi
        else:
            return float(self.utility.value(self._cap))
        return float(self.utility.value(x)) - x * y

    def _value(self, y: np.ndarray) -> np.ndarray:
        return np.array([self._value_scalar(float(v)) for v in y])

    def _subdiff(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        lo = np.empty_like(y)
        hi = np.empty_like(y)
        for i, v in enumerate(y):
            x_lo, x_hi = self.maximizers(float(v))
            lo[i], hi[i] = -x_hi, -x_lo
        return lo, hi
