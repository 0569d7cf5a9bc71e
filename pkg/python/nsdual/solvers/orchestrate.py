"""End-to-end duality solve: validate, solve both sides, verify."""

from typing import Optional

import numpy as np

from ..config import NsDualSettings, get_settings
from ..convex.admissibility import AdmissibilityReport, Route, validate_admissibility
from ..convex.transforms import normalize
from ..convex.utility import Utility
from ..exceptions import ErrorCode, InadmissibleError, PreconditionError
from ..logging import get_logger
from ..market.polytope import MartingalePolytope, martingale_polytope
from ..market.tree import Claim, MarketTree, membership_residual
from .audit import admissible_class_audit
from .dual import solve_dual
from .measures import dual_over_measures
from .models import DualPoint, SolveReport
from .primal import solve_primal_dynamic, solve_primal_static
from .uniqueness import uniqueness_probe
from .verify import verify_duality

logger = get_logger("solvers.orchestrate")


def require_admissible(utility: Utility, settings: Optional[NsDualSettings] = None) -> AdmissibilityReport:
    """Admissibility report, raising when no route applies.

    Raises:
        InadmissibleError: With the failed conditions as details
    """
    report = validate_admissibility(utility, settings)
    if report.route is None:
        raise InadmissibleError(
            f"Utility {utility.family!r} is not admissible: " + "; ".join(report.reasons),
            error_code=ErrorCode.INADMISSIBLE_UTILITY,
            details={"reasons": report.reasons},
        )
    return report


def route_beta(utility: Utility, claim: Claim) -> float:
    """``β = max(∥B∥_∞, -domain_left/2)`` for the bounded-below route."""
    return max(claim.norm, -utility.domain_left / 2.0)


def solve_duality(
    tree: MarketTree,
    utility: Utility,
    claim: Claim,
    x: float,
    polytope: Optional[MartingalePolytope] = None,
    settings: Optional[NsDualSettings] = None,
    uniqueness: bool = False,
    audit: bool = False,
    seed: int = 0,
) -> SolveReport:
    """Solve primal and dual independently on the utility's route and verify.

    The utility is normalised so that ``U(0) > 0`` for the solves; reported
    values are shifted back into the caller's units.

    Raises:
        InadmissibleError: If the utility qualifies for no route
        ArbitrageError: If the tree admits arbitrage
        PreconditionError: If the bounded-below route is entered with x <= 0
    """
    settings = settings or get_settings()
    admissibility = require_admissible(utility, settings)
    polytope = polytope or martingale_polytope(tree, settings)
    normalized, k2 = normalize(utility)
    conj = normalized.conjugate()

    beta = None
    if admissibility.route == Route.UNBOUNDED:
        primal = solve_primal_dynamic(tree, normalized, claim, x, settings=settings)
        dual = solve_dual(tree, conj, claim, x, 0.0, polytope, settings)
    else:
        beta = route_beta(utility, claim)
        if not x > 0:
            raise PreconditionError(
                "The bounded-below route needs x > 0",
                error_code=ErrorCode.PRECONDITION_FAILED,
                details={"x": x},
                field="x",
            )
        primal = solve_primal_static(tree, normalized, claim, x, beta, polytope, settings)
        dual = solve_dual(tree, conj, claim, x, beta, polytope, settings)

    oracle = dual_over_measures(tree, conj, claim, x, polytope, settings)

    density = dual.density
    report = SolveReport(
        route=admissibility.route.value,
        family=utility.family,
        x=x,
        V=primal.value - k2,
        W=dual.value - k2,
        gap=dual.value - primal.value,
        atoms=tree.atom_ids(),
        B=[float(v) for v in claim.payoff],
        X=[float(v) for v in primal.wealth],
        theta=primal.strategy.holdings.tolist() if primal.strategy is not None else None,
        dual=DualPoint(y=dual.y, Y=[float(v) for v in dual.Y], membership_residual=_membership(tree, density)),
        Q=[float(v) for v in density] if density is not None else None,
        normalization_shift=k2,
        beta=beta,
        satiated=primal.satiated or dual.y <= 0,
        measures_value=oracle.value - k2,
        smoothing_trace=dual.trace,
        flags={
            "dual_strictly_positive": bool(dual.Y.size and np.min(dual.Y) > 0),
            "floor_respected": bool(primal.floor_ok) if primal.floor_ok is not None else True,
            "oracle_agrees": abs(oracle.value - dual.value)
            <= 10.0 * settings.tol_solve * max(1.0, abs(dual.value)),
        },
        admissibility=admissibility,
    )

    diagnostics = verify_duality(report, tree, normalized, conj, claim, x, polytope, settings)
    updates = {"diagnostics": diagnostics}
    if uniqueness:
        updates["uniqueness"] = uniqueness_probe(
            tree, normalized, conj, claim, x, dual.Y, seed=seed, polytope=polytope, settings=settings
        )
    if audit:
        updates["audit"] = admissible_class_audit(report, tree, normalized, conj, claim, x, polytope, settings)
    report = report.model_copy(update=updates)
    logger.info(
        "Duality solve finished",
        route=report.route,
        V=report.V,
        W=report.W,
        passed=diagnostics.passed,
    )
    return report


def _membership(tree: MarketTree, density: Optional[np.ndarray]) -> float:
    return 0.0 if density is None else membership_residual(tree, density)
