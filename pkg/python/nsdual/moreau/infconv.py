"""Quadratic inf-convolution of a conjugate.

For a conjugate Ũ, a level ``n > 0`` and an offset ``β >= 0``::

    Ũₙ(y) = βy + inf_{z >= 0} ( Ũ(z) - βz + (n/2)(y - z)² )

is finite, convex and continuously differentiable on all of ℝ, lies below Ũ
on ``[0, inf)`` and increases to Ũ as ``n`` grows. The minimiser ``zₙ(y)`` is
the proximal point and ``DŨₙ(y) = n(y - zₙ(y)) + β``.
"""

import math
from typing import Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from ..config import NsDualSettings, get_settings
from ..convex.conjugate import ArrayLike, ConjugateFunction
from ..exceptions import ErrorCode, ValidationError
from ..logging import get_logger

DEFAULT_MUS = (0.5, 0.75, 1.0)
DEFAULT_GAMMAS = (2.0, 4.0, 8.0, 16.0)
DEFAULT_LEVELS = (1.0, 10.0, 100.0)


def _as_array(y: ArrayLike) -> np.ndarray:
    return np.atleast_1d(np.asarray(y, dtype=float))


def _out(values: np.ndarray, like: ArrayLike):
    if np.ndim(like) == 0:
        return float(values[0])
    return values


def dyadic_grid(y0: float, depth: int = 20) -> np.ndarray:
    """``y0 * 2^(-k)`` for ``k = 0..depth``."""
    return y0 * np.power(2.0, -np.arange(depth + 1, dtype=float))


class GrowthCheck(BaseModel):
    """Result of a grid check of one growth inequality."""

    passed: bool
    gamma: float
    max_defect: float


class TransferCertificate(BaseModel):
    """Witness ``(C, γ)`` for the elasticity bounds of the smoothed family."""

    passed: bool
    constant: Optional[float] = None
    gamma: Optional[float] = None
    levels: Tuple[float, ...]
    y0: float
    tried_gammas: Tuple[float, ...]


class ProximityCheck(BaseModel):
    """``|zₙ(y) - y|² <= (4/n)[Ũₙ(y) - βy + xy + C]`` with ``C`` calibrated at n = 1."""

    passed: bool
    constant: float
    worst_slack: float
    levels: Tuple[float, ...]


class InfConvolution:
    """Smoothed conjugate ``Ũₙ`` with its proximal point and derivative."""

    def __init__(
        self,
        conj: ConjugateFunction,
        n: float,
        beta: float = 0.0,
        settings: Optional[NsDualSettings] = None,
    ):
        if not n > 0:
            raise ValidationError(
                "Smoothing level must be positive",
                error_code=ErrorCode.VALIDATION_FAILED,
                field="n",
            )
        if beta < 0:
            raise ValidationError("Offset beta must be nonnegative", field="beta")
        self.conj = conj
        self.n = float(n)
        self.beta = float(beta)
        self.settings = settings or get_settings()
        self.logger = get_logger("moreau.infconv")
        lo, hi = conj.domain
        if hi < max(lo, 0.0):
            raise ValidationError(
                "Conjugate is +inf on all of [0, inf)",
                error_code=ErrorCode.INVALID_UTILITY,
                details={"domain": [lo, hi]},
            )
        self._pieces = conj.pieces()

    def at_level(self, n: float) -> "InfConvolution":
        """Same conjugate and offset at another smoothing level."""
        return InfConvolution(self.conj, n, self.beta, self.settings)

    # Proximal point

    def _prox_exact(self, y: np.ndarray) -> np.ndarray:
        """Exact minimiser for piecewise-affine conjugates.

        The minimiser is a stationary point of one active piece or a kink of the
        envelope; both candidate sets are evaluated and the best one kept.
        """
        a, b = self._pieces
        lo, hi = self.conj.domain
        left = max(lo, 0.0)
        stationary = y[:, None] + (self.beta - b[None, :]) / self.n
        stationary = np.clip(stationary, left, hi)

        kinks = []
        for i in range(a.size):
            for j in range(i + 1, a.size):
                if b[i] != b[j]:
                    z = (a[i] - a[j]) / (b[j] - b[i])
                    if left <= z <= hi:
                        kinks.append(z)
        fixed = [left] + ([hi] if math.isfinite(hi) else []) + kinks
        fixed_block = np.broadcast_to(np.asarray(fixed, dtype=float), (y.size, len(fixed)))
        candidates = np.concatenate([stationary, fixed_block], axis=1)

        envelope = np.max(a[None, None, :] + b[None, None, :] * candidates[:, :, None], axis=2)
        objective = (
            envelope
            - self.beta * candidates
            + 0.5 * self.n * (candidates - y[:, None]) ** 2
        )
        best = np.argmin(objective, axis=1)
        return candidates[np.arange(y.size), best]

    def _prox_bisect(self, y: np.ndarray) -> np.ndarray:
        """Bisection on ``0 ∈ ∂Ũ(z) - β + n(z - y)`` over ``z >= 0``."""
        conj, n, beta = self.conj, self.n, self.beta
        z = np.zeros_like(y)
        _, hi0 = conj.subdiff_bounds(np.zeros_like(y))
        active = ~(hi0 - beta - n * y >= 0)
        if not np.any(active):
            return z

        ya = y[active]
        left = np.zeros_like(ya)
        right = np.maximum(ya, 0.0) + 1.0
        for _ in range(200):
            lo_r, _ = conj.subdiff_bounds(right)
            grow = lo_r - beta + n * (right - ya) <= 0
            if not np.any(grow):
                break
            right = np.where(grow, 2.0 * right, right)
        else:
            raise ValidationError(
                "Could not bracket the proximal point",
                error_code=ErrorCode.INVALID_UTILITY,
                details={"n": n, "beta": beta},
            )

        scale = self.settings.tol_prox / max(1.0, n)
        floor = 8.0 * np.finfo(float).eps
        for _ in range(600):
            width = np.maximum(scale * (1.0 + np.abs(right)), floor * np.maximum(1.0, np.abs(right)))
            if np.all(right - left <= width):
                break
            mid = 0.5 * (left + right)
            if np.all((mid == left) | (mid == right)):
                break
            lo_m, hi_m = conj.subdiff_bounds(mid)
            below = hi_m - beta + n * (mid - ya) < 0
            above = lo_m - beta + n * (mid - ya) > 0
            exact = ~below & ~above
            left = np.where(below | exact, mid, left)
            right = np.where(above | exact, mid, right)

        lo, hi = conj.domain
        z[active] = np.clip(0.5 * (left + right), max(lo, 0.0), hi)
        return z

    def prox_point(self, y: ArrayLike):
        """Unique minimiser ``zₙ(y) >= 0``; defined for every real ``y``."""
        arr = _as_array(y)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            if self._pieces is not None:
                z = self._prox_exact(arr)
            else:
                z = self.conj.prox(arr, self.n, self.beta)
                z = self._prox_bisect(arr) if z is None else np.asarray(z, dtype=float)
        return _out(z, y)

    # Value and derivative

    def evaluate(self, y: ArrayLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(Ũₙ(y), DŨₙ(y), zₙ(y))`` as arrays."""
        arr = _as_array(y)
        z = np.atleast_1d(self.prox_point(arr))
        base = np.asarray(self.conj.value(z), dtype=float)
        value = base - self.beta * (z - arr) + 0.5 * self.n * (z - arr) ** 2
        deriv = self.n * (arr - z) + self.beta
        return value, deriv, z

    def value(self, y: ArrayLike):
        """``Ũₙ(y)``."""
        return _out(self.evaluate(y)[0], y)

    def derivative(self, y: ArrayLike):
        """``DŨₙ(y) = n(y - zₙ(y)) + β``."""
        return _out(self.evaluate(y)[1], y)

    # Growth properties

    def base_growth_check(
        self, gamma: float, y0: float, mus: Sequence[float] = DEFAULT_MUS
    ) -> GrowthCheck:
        """``Ũ(μy) - 2βμy <= μ^(-γ)(Ũ(y) - 2βy)`` on ``(0, y0]``."""
        ys = dyadic_grid(y0)
        base = np.asarray(self.conj.value(ys)) - 2.0 * self.beta * ys
        worst = -math.inf
        for mu in mus:
            scaled = np.asarray(self.conj.value(mu * ys)) - 2.0 * self.beta * mu * ys
            worst = max(worst, float(np.max(scaled - mu ** (-gamma) * base)))
        tol = self.settings.tol_conj_closed * (1.0 + float(np.max(np.abs(base))))
        return GrowthCheck(passed=worst <= tol, gamma=gamma, max_defect=worst)

    def nonnegativity_near_zero(self, y0: float) -> bool:
        """``Ũ(y) - 2βy >= 0`` on the grid ``(0, y0]``."""
        ys = dyadic_grid(y0)
        return bool(np.all(np.asarray(self.conj.value(ys)) - 2.0 * self.beta * ys >= 0))

    def proximity_bound_check(
        self,
        ys: Sequence[float],
        x: float = 1.0,
        levels: Sequence[float] = (1.0, 10.0, 100.0, 1000.0),
    ) -> ProximityCheck:
        """Check ``|zₙ(y) - y|² <= (4/n)[Ũₙ(y) - βy + xy + C]`` across levels.

        ``C`` is calibrated as the largest defect at the first level and then
        used as a fixed constant for the remaining ones.
        """
        grid = np.asarray(ys, dtype=float)
        constant = None
        worst = -math.inf
        for n in levels:
            value, _, z = self.at_level(n).evaluate(grid)
            lhs = (z - grid) ** 2
            inner = value - self.beta * grid + x * grid
            if constant is None:
                constant = max(0.0, float(np.max(n * lhs / 4.0 - inner)))
            slack = lhs - (4.0 / n) * (inner + constant)
            worst = max(worst, float(np.max(slack)))
        passed = worst <= 1e3 * self.settings.tol_prox
        return ProximityCheck(
            passed=passed, constant=float(constant), worst_slack=worst, levels=tuple(levels)
        )


def prox_point(ic: InfConvolution, y: ArrayLike):
    """Proximal point ``zₙ(y)``."""
    return ic.prox_point(y)


def infconv_value(ic: InfConvolution, y: ArrayLike):
    """Smoothed value ``Ũₙ(y)``."""
    return ic.value(y)


def infconv_deriv(ic: InfConvolution, y: ArrayLike):
    """Derivative ``DŨₙ(y)``."""
    return ic.derivative(y)


def elasticity_transfer_check(
    ic: InfConvolution,
    y0: float,
    levels: Sequence[float] = DEFAULT_LEVELS,
    gammas: Sequence[float] = DEFAULT_GAMMAS,
    mus: Sequence[float] = DEFAULT_MUS,
) -> TransferCertificate:
    """Search ``(C, γ)`` uniform in ``n`` for the smoothed growth bounds.

    Checks on ``y ∈ (0, y0]`` and every level in ``levels``::

        Ũₙ(μy) - βμy <= μ^(-γ) [C + Ũₙ(y) - βy]      for μ in mus
        -(DŨₙ(y) - β) y <= C (1 + Ũₙ(y) - βy)

    Returns:
        The first ``γ`` in ``gammas`` admitting a finite ``C``, with that ``C``
    """
    logger = get_logger("moreau.elasticity_transfer")
    ys = dyadic_grid(y0)
    beta = ic.beta

    for gamma in gammas:
        lower = 0.0
        upper = math.inf
        for n in levels:
            level = ic.at_level(n)
            value, deriv, _ = level.evaluate(ys)
            shifted = value - beta * ys
            for mu in mus:
                scaled = np.asarray(level.value(mu * ys)) - beta * mu * ys
                lower = max(lower, float(np.max(mu ** gamma * scaled - shifted)))
            num = -(deriv - beta) * ys
            den = 1.0 + shifted
            pos = den > 0
            if np.any(pos):
                lower = max(lower, float(np.max(num[pos] / den[pos])))
            neg = den < 0
            if np.any(neg):
                upper = min(upper, float(np.min(num[neg] / den[neg])))
            if np.any((den == 0) & (num > 0)):
                upper = -math.inf
        if math.isfinite(lower) and lower <= upper:
            logger.debug("Elasticity transfer certified", gamma=gamma, constant=lower)
            return TransferCertificate(
                passed=True,
                constant=lower,
                gamma=gamma,
                levels=tuple(levels),
                y0=y0,
                tried_gammas=tuple(gammas),
            )

    logger.warning("No elasticity transfer witness found", y0=y0, beta=beta)
    return TransferCertificate(
        passed=False, levels=tuple(levels), y0=y0, tried_gammas=tuple(gammas)
    )
