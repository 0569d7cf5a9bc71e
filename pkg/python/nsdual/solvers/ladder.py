"""Truncation ladder: approximate a utility on ℝ by its restrictions to ``[-n, inf)``."""

from typing import Optional, Sequence

from ..config import NsDualSettings, get_settings
from ..convex.transforms import truncate
from ..convex.utility import Utility
from ..exceptions import PreconditionError
from ..logging import get_logger
from ..market.polytope import MartingalePolytope, martingale_polytope
from ..market.tree import Claim, MarketTree
from .dual import dual_objective, solve_dual
from .models import LadderKind, LadderPoint, LadderTrace
from .primal import solve_primal_dynamic, solve_primal_static

logger = get_logger("solvers.ladder")

DEFAULT_LEVELS = (2.0, 4.0, 8.0, 16.0, 32.0)


def truncation_ladder(
    tree: MarketTree,
    utility: Utility,
    claim: Claim,
    x: float,
    levels: Sequence[float] = DEFAULT_LEVELS,
    polytope: Optional[MartingalePolytope] = None,
    settings: Optional[NsDualSettings] = None,
) -> LadderTrace:
    """Solve the truncated problems ``(U_n, x + n/2, B + n/2)`` for each level.

    Shifting capital and liability by ``n/2`` keeps ``X - B`` unchanged, so
    ``V_n`` and ``W_n`` approximate ``V(x)`` from below as ``n`` grows. The
    reference value is the dynamic primal solution of the untruncated problem.

    Raises:
        PreconditionError: If some level is below ``2∥B∥_∞``
    """
    settings = settings or get_settings()
    polytope = polytope or martingale_polytope(tree, settings)
    norm = claim.norm
    short = [n for n in levels if n < 2.0 * norm]
    if short:
        raise PreconditionError(
            "Truncation levels must be at least 2*||B||",
            details={"levels": list(short), "norm": norm},
            field="levels",
        )

    trace = LadderTrace(kind=LadderKind.TRUNCATION)
    conjugates = []
    candidates = []
    for n in levels:
        truncated = truncate(utility, n)
        shifted_claim = claim + n / 2.0
        x_n = x + n / 2.0
        beta = shifted_claim.norm
        conj = truncated.conjugate()
        primal = solve_primal_static(tree, truncated, shifted_claim, x_n, beta, polytope, settings)
        dual = solve_dual(tree, conj, shifted_claim, x_n, beta, polytope, settings)
        conjugates.append(conj)
        candidates.append(dual.Y)
        trace.points.append(LadderPoint(n=n, primal=primal.value, dual=dual.value))
        logger.info("Truncation level solved", level=n, primal=primal.value, dual=dual.value)

    # The n/2 shifts cancel in the objective; each truncated conjugate lies
    # below the next, and every level is evaluated at every optimiser.
    for point, conj in zip(trace.points, conjugates):
        point.dual = min(dual_objective(tree, conj, claim, x, w) for w in candidates)
    trace.settle()
    reference = solve_primal_dynamic(tree, utility, claim, x, settings=settings)
    trace.reference = reference.value
    if trace.points:
        trace.final_gap = abs(trace.points[-1].dual - reference.value)
    logger.info(
        "Truncation ladder finished",
        monotone=trace.monotone,
        max_violation=trace.max_violation,
        final_gap=trace.final_gap,
    )
    return trace
