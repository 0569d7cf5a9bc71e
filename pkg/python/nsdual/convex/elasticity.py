"""Asymptotic elasticity of conjugates.

The ratio ``|q|*y / Ũ(y)`` with ``q ∈ ∂Ũ(y)`` is sampled on a geometric grid
approaching one end of the domain. Bounded ratios certify the growth
conditions used by the existence results; the same grid yields the constant
``C`` in ``Ũ(μy) <= C*Ũ(y)`` for ``μ ∈ {1/2, 2}``.
"""

import math
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..config import NsDualSettings, get_settings
from ..exceptions import ShiftRequiredError
from ..logging import get_logger
from .conjugate import ConjugateFunction

logger = get_logger("convex.elasticity")

MU_VALUES = (0.5, 2.0)


class ElasticityEnd(str, Enum):
    ZERO = "zero"
    INFINITY = "infinity"


class ElasticityEstimate(BaseModel):
    """Grid estimate of the asymptotic elasticity at one domain end."""

    model_config = ConfigDict(frozen=True)

    end: ElasticityEnd
    sup_ratio: float
    tail_ratio: float
    lemma_constant: float
    growth_constant: float
    divergent: bool
    grid_size: int
    reason: Optional[str] = None

    @property
    def finite(self) -> bool:
        return not self.divergent and math.isfinite(self.sup_ratio)


def elasticity_grid(conj: ConjugateFunction, end: ElasticityEnd, depth: int) -> np.ndarray:
    """``y = 2^(-k)`` towards zero; ``2^k`` or ``r(1 - 2^(-k))`` towards ``r``."""
    ks = np.arange(1, depth + 1, dtype=float)
    if end == ElasticityEnd.ZERO:
        return np.power(2.0, -ks)
    if math.isinf(conj.r):
        return np.power(2.0, ks)
    return conj.r * (1.0 - np.power(2.0, -ks))


def estimate_asymptotic_elasticity(
    conj: ConjugateFunction,
    end: ElasticityEnd = ElasticityEnd.INFINITY,
    settings: Optional[NsDualSettings] = None,
) -> ElasticityEstimate:
    """Estimate ``AE₀`` or ``AE_r`` of ``conj`` on a geometric grid.

    Args:
        conj: Conjugate to inspect; must be positive on the grid
        end: Which end of the domain to approach
        settings: Grid depth and divergence cap

    Returns:
        The supremum of the ratio over the grid, the last-point ratio, the
        ``Ũ(μy) <= C Ũ(y)`` constant and a divergence flag

    Raises:
        ShiftRequiredError: If Ũ <= 0 somewhere on the sampled grid
    """
    settings = settings or get_settings()
    end = ElasticityEnd(end)
    ys = elasticity_grid(conj, end, settings.elasticity_depth)
    values = np.asarray(conj.value(ys), dtype=float)

    if not np.all(values > 0):
        worst = float(np.min(values))
        raise ShiftRequiredError(
            "Conjugate is not positive on the elasticity grid; shift the utility first",
            details={"end": end.value, "min_value": worst},
        )

    lo, hi = conj.subdiff_bounds(ys)
    q = np.maximum(np.abs(lo), np.abs(hi))
    with np.errstate(invalid="ignore", over="ignore"):
        ratios = q * ys / values

    reason = None
    divergent = False
    if not np.all(np.isfinite(ratios)):
        divergent = True
        reason = "non-finite ratio on the grid"
    elif end == ElasticityEnd.INFINITY and math.isfinite(conj.r):
        divergent = True
        reason = "finite right end r; a finite elasticity at r forces r = inf"
    else:
        tail = ratios[-5:]
        if tail[-1] > settings.elasticity_cap and np.all(np.diff(tail) > 0):
            divergent = True
            reason = "ratio grows monotonically beyond the cap"

    lemma_constant = 0.0
    for mu in MU_VALUES:
        scaled = np.asarray(conj.value(mu * ys), dtype=float)
        usable = np.isfinite(scaled)
        if end == ElasticityEnd.INFINITY and math.isfinite(conj.r):
            usable &= mu * ys < conj.r
        if np.any(usable):
            lemma_constant = max(lemma_constant, float(np.max(scaled[usable] / values[usable])))

    finite_ratios = ratios[np.isfinite(ratios)]
    sup_ratio = float(np.max(finite_ratios)) if not divergent else math.inf
    tail_ratio = float(ratios[-1]) if np.isfinite(ratios[-1]) else math.inf

    estimate = ElasticityEstimate(
        end=end,
        sup_ratio=sup_ratio,
        tail_ratio=tail_ratio,
        lemma_constant=lemma_constant,
        growth_constant=sup_ratio,
        divergent=divergent,
        grid_size=int(ys.size),
        reason=reason,
    )
    logger.debug(
        "Estimated asymptotic elasticity",
        end=end.value,
        sup_ratio=sup_ratio,
        tail_ratio=tail_ratio,
        divergent=divergent,
    )
    return estimate
