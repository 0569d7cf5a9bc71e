"""Audit of the admissible trading classes at the optimum.

With a strictly positive dual optimiser the optimal wealth process must be a
martingale under ``Q* = Y*/y*·P`` and a supermartingale under every vertex
measure with finite dual cost. The dual value function ``Ṽ`` must also grow
at most proportionally under rescaling of ``y``, ``Ṽ(λy) <= C·Ṽ(y)``.
"""

import math
from typing import List, Optional, Sequence

import numpy as np

from ..config import NsDualSettings, get_settings
from ..convex.conjugate import ConjugateFunction
from ..convex.utility import Utility
from ..logging import get_logger
from ..market.polytope import MartingalePolytope, martingale_polytope
from ..market.replication import replicate
from ..market.tree import (
    Claim,
    MarketTree,
    MartingaleDensity,
    Strategy,
    martingale_residuals,
    supermartingale_residuals,
    wealth_process,
)
from .measures import DualValueFunction
from .models import AuditReport, SolveReport

logger = get_logger("solvers.audit")

SCALES = (0.5, 0.75, 1.0, 1.5, 2.0)
GRID_EXPONENTS = range(-3, 4)


def growth_constant(curve_values: dict, ys: Sequence[float], scales: Sequence[float]) -> float:
    """Smallest ``C >= 0`` with ``Ṽ(λy) <= C·Ṽ(y)`` on the grid, or ``inf``.

    Positive ``Ṽ(y)`` bound ``C`` from below, negative ones from above and a
    zero ``Ṽ(y)`` needs ``Ṽ(λy) <= 0``; no values are shifted.
    """
    lower = 0.0
    upper = math.inf
    for y in ys:
        base = curve_values[y]
        for lam in scales:
            scaled = curve_values[lam * y]
            if not math.isfinite(scaled) or not math.isfinite(base):
                return math.inf
            if base > 0:
                lower = max(lower, scaled / base)
            elif base < 0:
                upper = min(upper, scaled / base)
            elif scaled > 0:
                return math.inf
    return lower if lower <= upper else math.inf


def admissible_class_audit(
    report: SolveReport,
    tree: MarketTree,
    utility: Utility,
    conj: ConjugateFunction,
    claim: Claim,
    x: float,
    polytope: Optional[MartingalePolytope] = None,
    settings: Optional[NsDualSettings] = None,
) -> AuditReport:
    """Martingale, supermartingale and growth checks; skipped unless ``Y* > 0``."""
    settings = settings or get_settings()
    dual = np.asarray(report.dual.Y, dtype=float)
    y = report.dual.y
    if y <= 0 or dual.size == 0 or float(np.min(dual)) <= 0:
        logger.info("Admissible class audit skipped", y=y)
        return AuditReport(skipped=True, reason="dual optimiser is not strictly positive")

    polytope = polytope or martingale_polytope(tree, settings)
    wealth = np.asarray(report.X, dtype=float)
    density = MartingaleDensity(dual / y)
    if report.theta is not None:
        process = wealth_process(tree, x, Strategy(np.asarray(report.theta, dtype=float)))
    else:
        rep = replicate(tree, density, wealth, settings)
        process = wealth_process(tree, rep.cost, rep.strategy)
    tol = settings.tol_replication * (1.0 + float(np.max(np.abs(wealth))))
    martingale = float(np.nanmax(martingale_residuals(tree, density.weights, process), initial=0.0))

    supers: List[float] = []
    if polytope.vertices is not None:
        for z in polytope.vertices:
            if not np.all(np.isfinite(np.asarray(conj.value(z), dtype=float))):
                continue
            residual = supermartingale_residuals(tree, z, process)
            supers.append(float(np.nanmax(residual, initial=0.0)))

    # U(-∥B∥) + offset >= 1, so Ṽ >= 1 by Fenchel-Young
    offset = max(0.0, 1.0 - float(utility.value(-claim.norm)))
    curve = DualValueFunction(tree, conj.shifted(0.0, offset), claim, polytope, settings)
    ys = [y * 2.0 ** j for j in GRID_EXPONENTS]
    points = sorted({float(lam * v) for v in ys for lam in SCALES} | set(ys))
    values = {p: curve(p) for p in points}
    lookup = {lam * v: values[float(lam * v)] for v in ys for lam in SCALES}
    lookup.update({v: values[v] for v in ys})
    constant = growth_constant(lookup, ys, SCALES)

    h = 1e-4 * y
    centre = curve(y)
    right = (curve(y + h) - centre) / h
    left = (centre - curve(y - h)) / h
    fd_tol = 1e-3 * (1.0 + abs(x))
    in_superdiff = left - fd_tol <= -x <= right + fd_tol

    growth_ok = math.isfinite(constant)
    passed = (
        martingale <= tol
        and all(s <= tol for s in supers)
        and growth_ok
        and in_superdiff
    )
    audit = AuditReport(
        martingale_residual=martingale,
        supermartingale_residuals=supers,
        vertices_checked=len(supers),
        growth_constant=constant if growth_ok else None,
        value_offset=offset,
        growth_ok=growth_ok,
        capital_in_superdiff=in_superdiff,
        left_derivative=left,
        right_derivative=right,
        passed=passed,
    )
    logger.info(
        "Admissible class audit finished",
        martingale=martingale,
        vertices=len(supers),
        growth_constant=constant,
        passed=passed,
    )
    return audit
