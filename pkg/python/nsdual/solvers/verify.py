"""Duality verifier: residuals of the optimality system for a finished solve."""

import math
from typing import List, Optional

import numpy as np

from ..config import NsDualSettings, get_settings
from ..convex.admissibility import Route
from ..convex.conjugate import ConjugateFunction
from ..convex.utility import Utility
from ..logging import get_logger
from ..market.polytope import MartingalePolytope, martingale_polytope, superreplication_price
from ..market.replication import replicate
from ..market.tree import (
    Claim,
    MarketTree,
    MartingaleDensity,
    Strategy,
    martingale_residuals,
    price_matrix,
    wealth_process,
)
from .models import DualityDiagnostics, SolveReport

logger = get_logger("solvers.verify")

POSITIVE_WEIGHT = 1e-8


def _interval_distance(values: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Distance of each value to ``[lo, hi]`` on the extended line."""
    with np.errstate(invalid="ignore"):
        below = np.where(np.isfinite(lo) | (lo > values), lo - values, -np.inf)
        above = np.where(np.isfinite(hi) | (hi < values), values - hi, -np.inf)
    return np.maximum(np.maximum(below, above), 0.0)


def inclusion_residuals(
    conj: ConjugateFunction, claim: Claim, wealth: np.ndarray, dual: np.ndarray
) -> np.ndarray:
    """``dist(B - X*, ∂Ũ(Y*))`` atomwise.

    At ``Y* = 0`` the convention ``L × 0 = 0`` applies through the extended
    subdifferential ``∂Ũ(0) = (-inf, -L]``.
    """
    lo, hi = conj.subdiff_bounds(np.maximum(dual, 0.0))
    return _interval_distance(claim.payoff - wealth, lo, hi)


def kkt_residuals(utility: Utility, claim: Claim, wealth: np.ndarray, dual: np.ndarray) -> np.ndarray:
    """``dist(Y*, ∂U(X* - B))`` atomwise."""
    lo, hi = utility.superdiff_bounds(wealth - claim.payoff)
    return _interval_distance(np.asarray(dual, dtype=float), lo, hi)


def select_primal_from_dual(
    tree: MarketTree,
    conj: ConjugateFunction,
    claim: Claim,
    x: float,
    dual: np.ndarray,
) -> np.ndarray:
    """Wealth ``X ∈ B - ∂Ũ(Y)`` meeting the budget ``E[XY] = x·E[Y]``.

    Every atom takes the same affine position ``τ`` inside its subdifferential
    interval; atoms with ``Y = 0`` sit at ``B + L``.
    """
    dual = np.maximum(np.asarray(dual, dtype=float), 0.0)
    lo, hi = conj.subdiff_bounds(dual)
    lo = np.where(np.isfinite(lo), lo, hi)
    hi = np.where(np.isfinite(hi), hi, lo)
    y = float(tree.p @ dual)
    weights = tree.p * dual
    spread = float(weights @ (hi - lo))
    tau = 0.5
    if spread > 0:
        tau = float(np.clip((float(weights @ (claim.payoff - lo)) - x * y) / spread, 0.0, 1.0))
    return claim.payoff - (lo + tau * (hi - lo))


def dual_finite(tree: MarketTree, conj: ConjugateFunction, polytope: MartingalePolytope) -> bool:
    """``E Ũ(Z) < inf`` at the interior martingale density."""
    values = np.asarray(conj.value(polytope.interior.weights), dtype=float)
    return bool(np.all(np.isfinite(values)))


def verify_duality(
    report: SolveReport,
    tree: MarketTree,
    utility: Utility,
    conj: ConjugateFunction,
    claim: Claim,
    x: float,
    polytope: Optional[MartingalePolytope] = None,
    settings: Optional[NsDualSettings] = None,
) -> DualityDiagnostics:
    """Check the optimality system of a completed solve.

    Computes the relative gap, the atomwise inclusions ``B - X* ∈ ∂Ũ(Y*)`` and
    ``Y* ∈ ∂U(X* - B)``, the budget ``E[X*Y*] = x·y*``, replication and
    martingale residuals when ``Y* > 0``, the positivity audit for unsatiated
    utilities and the floor and attainability checks of the bounded-below
    route. Never raises for failed checks; ``failures`` lists them.
    """
    settings = settings or get_settings()
    polytope = polytope or martingale_polytope(tree, settings)
    wealth = np.asarray(report.X, dtype=float)
    dual = np.asarray(report.dual.Y, dtype=float)
    y = report.dual.y
    failures: List[str] = []
    threshold = 10.0 * settings.tol_solve

    gap = report.W - report.V
    gap_rel = abs(gap) / max(1.0, abs(report.V), abs(report.W))
    if gap_rel > threshold:
        failures.append(f"relative duality gap {gap_rel:.3e}")
    if gap < -threshold * max(1.0, abs(report.V)):
        failures.append(f"weak duality violated by {-gap:.3e}")

    inclusion = inclusion_residuals(conj, claim, wealth, dual)
    scale = 1.0 + np.abs(claim.payoff - wealth)
    kkt = kkt_residuals(utility, claim, wealth, dual)
    kkt_scaled = kkt / (1.0 + np.abs(dual))
    kkt_max = float(np.max(kkt_scaled))

    # ∂Ũ(Y) is empty where Y sits at an open domain edge (Y = 0 for an
    # unsatiated utility whose slope underflows); the atom is checked from the
    # primal side through Y ∈ ∂U(X - B) instead.
    lo, hi = conj.subdiff_bounds(np.maximum(dual, 0.0))
    empty = (lo == hi) & ~np.isfinite(lo)
    inclusion = np.where(empty, kkt, inclusion)
    inclusion_max = float(np.max(np.where(empty, kkt_scaled, inclusion / scale)))
    if inclusion_max > settings.tol_inclusion:
        failures.append(f"subdifferential inclusion residual {inclusion_max:.3e}")

    if report.measures_value is not None:
        oracle_gap = abs(report.measures_value - report.W)
        if oracle_gap > threshold * max(1.0, abs(report.W)):
            failures.append(f"measures oracle disagrees with the dual by {oracle_gap:.3e}")
    else:
        oracle_gap = None

    trace = report.smoothing_trace
    if trace is not None and not trace.monotone:
        failures.append(f"smoothing ladder not monotone (drop {trace.max_violation:.3e})")

    budget = abs(float(tree.p @ (wealth * dual)) - x * y)
    if budget > threshold * (1.0 + abs(x * y)):
        failures.append(f"budget residual {budget:.3e}")

    min_weight = float(np.min(dual)) if dual.size else 0.0
    replication_residual = None
    wealth_residual = None
    price_residual = None
    if y > 0 and min_weight > POSITIVE_WEIGHT:
        density = MartingaleDensity(dual / y)
        rep = replicate(tree, density, wealth, settings)
        replication_residual = rep.max_residual
        if not rep.replicable:
            failures.append(f"optimal wealth not replicable under Q* ({rep.max_residual:.3e})")
        if report.theta is not None:
            strategy = Strategy(np.asarray(report.theta, dtype=float))
            process = wealth_process(tree, x, strategy)
        else:
            process = wealth_process(tree, rep.cost, rep.strategy)
        wealth_residual = float(np.nanmax(martingale_residuals(tree, density.weights, process), initial=0.0))
        price_residual = float(
            np.nanmax(martingale_residuals(tree, density.weights, price_matrix(tree)), initial=0.0)
        )
        tol = settings.tol_replication * (1.0 + float(np.max(np.abs(wealth))))
        if wealth_residual > tol:
            failures.append(f"wealth process is not a Q*-martingale ({wealth_residual:.3e})")

    positivity_checked = False
    positivity_ok = None
    if math.isinf(utility.satiation) and dual_finite(tree, conj, polytope):
        positivity_checked = True
        # An atom below the weight resolution still counts as positive when the
        # utility's slope at X - B is positive and matches Y.
        slope_lo, _ = utility.superdiff_bounds(wealth - claim.payoff)
        resolved = (dual >= POSITIVE_WEIGHT) | ((slope_lo > 0) & (kkt_scaled <= settings.tol_inclusion))
        positivity_ok = bool(np.all(resolved))
        if not positivity_ok:
            failures.append(f"dual optimiser not strictly positive (min {min_weight:.3e})")

    floor_ok = None
    attainable = None
    if report.route == Route.BOUNDED_BELOW.value and report.beta is not None:
        floor_ok = bool(np.min(wealth - claim.payoff) >= -2.0 * report.beta - settings.tol_membership)
        if not floor_ok:
            failures.append("optimal wealth breaks the floor X - B >= -2*beta")
        if np.min(wealth) >= 0:
            price = superreplication_price(tree, wealth, polytope, settings)
            attainable = price <= x + threshold * (1.0 + abs(x))

    diagnostics = DualityDiagnostics(
        gap=gap,
        gap_rel=gap_rel,
        inclusion_residuals=[float(v) for v in inclusion],
        inclusion_max=inclusion_max,
        kkt_max=kkt_max,
        oracle_gap=oracle_gap,
        budget_residual=budget,
        min_dual_weight=min_weight,
        satiated=y <= 0,
        replication_residual=replication_residual,
        wealth_martingale_residual=wealth_residual,
        price_martingale_residual=price_residual,
        positivity_checked=positivity_checked,
        positivity_ok=positivity_ok,
        floor_ok=floor_ok,
        attainable_in_x_plus=attainable,
        passed=not failures,
        failures=failures,
    )
    logger.info(
        "Verified duality",
        gap_rel=gap_rel,
        inclusion=inclusion_max,
        budget=budget,
        passed=diagnostics.passed,
    )
    return diagnostics
