"""Utility-indifference prices.

The price of a liability ``B`` at capital ``x`` is the ``p`` with
``V(x + p; B) = V(x; 0)``. ``V`` is nondecreasing and concave in capital, and
the root always lies between the no-arbitrage bounds of ``B``.
"""

from typing import Optional, Tuple

from pydantic import BaseModel
from scipy.optimize import bisect

from ..config import NsDualSettings, get_settings
from ..convex.admissibility import Route
from ..convex.utility import Utility
from ..exceptions import BracketError, ErrorCode, PreconditionError
from ..logging import get_logger
from ..market.polytope import MartingalePolytope, martingale_polytope, price_bounds
from ..market.tree import Claim, MarketTree
from ..solvers.orchestrate import require_admissible
from ..solvers.primal import solve_primal_dynamic

logger = get_logger("applications.indifference")


class IndifferenceResult(BaseModel):
    """Price, its bracket and the utilities at the root."""

    price: float
    bracket: Tuple[float, float]
    iterations: int
    converged: bool
    value_with_claim: float
    value_without_claim: float


def indifference_price(
    tree: MarketTree,
    utility: Utility,
    claim: Claim,
    x: float,
    polytope: Optional[MartingalePolytope] = None,
    settings: Optional[NsDualSettings] = None,
) -> IndifferenceResult:
    """Bisect ``p ↦ V(x + p; B) - V(x; 0)`` on ``[inf_Q E_Q B, sup_Q E_Q B]``.

    Raises:
        PreconditionError: If the utility is not defined on all of ℝ
        BracketError: If the difference does not change sign over the bracket
    """
    settings = settings or get_settings()
    admissibility = require_admissible(utility, settings)
    if admissibility.route != Route.UNBOUNDED:
        raise PreconditionError(
            "Indifference pricing needs a utility on all of R",
            error_code=ErrorCode.PRECONDITION_FAILED,
            details={"route": admissibility.route.value},
        )
    polytope = polytope or martingale_polytope(tree, settings)
    zero = Claim.zero(tree)
    baseline = solve_primal_dynamic(tree, utility, zero, x, settings=settings).value

    def value_with(p: float) -> float:
        return solve_primal_dynamic(tree, utility, claim, x + p, settings=settings).value

    def difference(p: float) -> float:
        return value_with(p) - baseline

    lo, hi = price_bounds(tree, claim.payoff, polytope, settings)
    tol = 10.0 * settings.tol_solve * (1.0 + abs(baseline))

    def result(price: float, iterations: int, converged: bool = True) -> IndifferenceResult:
        out = IndifferenceResult(
            price=price,
            bracket=(lo, hi),
            iterations=iterations,
            converged=converged,
            value_with_claim=value_with(price),
            value_without_claim=baseline,
        )
        logger.info("Indifference price found", price=price, iterations=iterations, bracket=[lo, hi])
        return out

    if hi - lo <= settings.tol_bisection:
        return result(0.5 * (lo + hi), 0)

    f_lo, f_hi = difference(lo), difference(hi)
    if abs(f_lo) <= tol:
        return result(lo, 0)
    if abs(f_hi) <= tol:
        return result(hi, 0)
    if f_lo > 0 or f_hi < 0:
        raise BracketError(
            "Indifference difference does not change sign on the no-arbitrage bracket",
            error_code=ErrorCode.BRACKET_INVALID,
            details={"bracket": [lo, hi], "f_lo": f_lo, "f_hi": f_hi},
        )

    root, info = bisect(
        difference,
        lo,
        hi,
        xtol=settings.tol_bisection,
        maxiter=settings.max_bisection_iterations,
        full_output=True,
        disp=False,
    )
    return result(float(root), int(info.iterations), bool(info.converged))
