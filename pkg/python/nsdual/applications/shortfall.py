"""Shortfall-risk minimisation: ``inf_X E ℓ([B - X]⁺)`` over attainable wealths."""

from typing import List, Optional

from pydantic import BaseModel

from ..config import NsDualSettings, get_settings
from ..exceptions import ErrorCode, InadmissibleError
from ..logging import get_logger
from ..market.polytope import MartingalePolytope
from ..market.tree import Claim, MarketTree
from ..solvers.models import SolveReport
from ..solvers.orchestrate import solve_duality
from .loss import LossFunction

logger = get_logger("applications.shortfall")


class ShortfallResult(BaseModel):
    """Minimal expected shortfall with the optimal hedge."""

    loss: dict
    risk: float
    X: List[float]
    theta: Optional[List[List[float]]] = None
    dual_value: float
    gap: float
    report: SolveReport


def shortfall_risk(
    tree: MarketTree,
    loss: LossFunction,
    claim: Claim,
    x: float,
    polytope: Optional[MartingalePolytope] = None,
    settings: Optional[NsDualSettings] = None,
) -> ShortfallResult:
    """Minimise expected shortfall through the utility ``U(x) = -ℓ(x⁻)``.

    Raises:
        InadmissibleError: If ``ℓ`` is affine near infinity
    """
    settings = settings or get_settings()
    if loss.linear_near_infinity:
        raise InadmissibleError(
            "Loss functions that are linear near infinity are not covered: "
            "the shortfall utility attains its largest slope",
            error_code=ErrorCode.INADMISSIBLE_UTILITY,
            details={"loss": loss.describe()},
        )
    report = solve_duality(tree, loss.utility(), claim, x, polytope=polytope, settings=settings)
    result = ShortfallResult(
        loss=loss.describe(),
        risk=-report.V,
        X=report.X,
        theta=report.theta,
        dual_value=-report.W,
        gap=report.W - report.V,
        report=report,
    )
    logger.info("Shortfall risk minimised", risk=result.risk, gap=result.gap)
    return result
