"""Primal solvers.

The dynamic solver maximises ``θ ↦ E U(x + Gθ - B)`` over trading strategies;
the static one maximises ``E U(X - B)`` over terminal wealths priced below
``x`` by every martingale measure. Neither touches the conjugate.
"""

import math
from typing import Optional

import numpy as np
from scipy.optimize import linprog, minimize

from ..config import NsDualSettings, get_settings
from ..convex.utility import Utility
from ..exceptions import ErrorCode, PreconditionError, SolverError
from ..logging import get_logger
from ..market.polytope import MartingalePolytope, martingale_polytope
from ..market.tree import Claim, MarketTree, Strategy, terminal_wealth
from .models import PrimalSolution

logger = get_logger("solvers.primal")

DIVERGENCE = 1e8


def expected_utility(tree: MarketTree, utility: Utility, wealth: np.ndarray, claim: Claim) -> float:
    """``E U(X - B)``."""
    return float(tree.p @ np.asarray(utility.value(wealth - claim.payoff), dtype=float))


def _supergradient_ascent(
    tree: MarketTree,
    utility: Utility,
    claim: Claim,
    x: float,
    theta0: np.ndarray,
    iterations: int,
) -> np.ndarray:
    """Diminishing steps ``a/(b + k)`` with iterate averaging; best point wins."""
    g_mat = tree.increments

    def f(theta: np.ndarray) -> float:
        return expected_utility(tree, utility, x + g_mat @ theta, claim)

    def supergrad(theta: np.ndarray) -> np.ndarray:
        slopes = np.asarray(utility.slope(x + g_mat @ theta - claim.payoff), dtype=float)
        return g_mat.T @ (tree.p * np.nan_to_num(slopes, posinf=0.0, neginf=0.0))

    theta = theta0.copy()
    best, best_value = theta.copy(), f(theta)
    g0 = supergrad(theta)
    norm0 = float(np.linalg.norm(g0))
    if norm0 == 0.0:
        return theta

    # initial step from a halving line search
    a = 1.0 / norm0
    for _ in range(40):
        if f(theta + a * g0) > best_value:
            break
        a *= 0.5
    b = 1.0

    avg = np.zeros_like(theta)
    weight = 0.0
    for k in range(iterations):
        g = supergrad(theta)
        gn = float(np.linalg.norm(g))
        if gn == 0.0:
            break
        step = a * norm0 / (b + k)
        theta = theta + step * g / gn
        avg = avg + step * theta
        weight += step
        value = f(theta)
        if value > best_value:
            best, best_value = theta.copy(), value
    if weight > 0 and f(avg / weight) > best_value:
        best = avg / weight
    return best


def _polish_linear_program(
    tree: MarketTree, utility: Utility, claim: Claim, x: float
) -> Optional[np.ndarray]:
    """Exact strategy for a piecewise-linear utility; ``None`` when unbounded."""
    c_pieces, s_pieces = utility.affine_pieces()
    g_mat = tree.increments
    m, h = tree.n_atoms, tree.n_holdings
    cost = np.concatenate([np.zeros(h), -tree.p])
    rows, rhs = [], []
    base = x - claim.payoff
    for cj, sj in zip(c_pieces, s_pieces):
        # t <= cj + sj*(x - B + Gθ)
        rows.append(np.hstack([-sj * g_mat, np.eye(m)]))
        rhs.append(cj + sj * base)
    if math.isfinite(utility.domain_left):
        rows.append(np.hstack([-g_mat, np.zeros((m, m))]))
        rhs.append(base - utility.domain_left)
    res = linprog(
        cost,
        A_ub=np.vstack(rows),
        b_ub=np.concatenate(rhs),
        bounds=[(None, None)] * (h + m),
        method="highs",
    )
    if res.status == 3:
        return None
    if res.status != 0:
        raise SolverError(f"Primal linear program failed: {res.message}", error_code=ErrorCode.SOLVER_FAILED)
    return res.x[:h]


def _polish_smooth(
    tree: MarketTree, utility: Utility, claim: Claim, x: float, theta: np.ndarray
) -> np.ndarray:
    g_mat = tree.increments

    def fun(th: np.ndarray):
        wealth = x + g_mat @ th - claim.payoff
        value = -float(tree.p @ np.asarray(utility.value(wealth), dtype=float))
        slopes = np.nan_to_num(np.asarray(utility.slope(wealth), dtype=float), posinf=0.0, neginf=0.0)
        return value, -(g_mat.T @ (tree.p * slopes))

    if math.isfinite(utility.domain_left):
        floor = utility.domain_left
        res = minimize(
            fun,
            theta,
            jac=True,
            method="SLSQP",
            constraints=[
                {
                    "type": "ineq",
                    "fun": lambda th: x + g_mat @ th - claim.payoff - floor,
                    "jac": lambda th: g_mat,
                }
            ],
            options={"maxiter": 1000, "ftol": 1e-15},
        )
    else:
        res = minimize(fun, theta, jac=True, method="BFGS", options={"gtol": 1e-12, "maxiter": 5000})
    if np.all(np.isfinite(res.x)) and res.fun <= fun(theta)[0]:
        return res.x
    return theta


def solve_primal_dynamic(
    tree: MarketTree,
    utility: Utility,
    claim: Claim,
    x: float,
    theta0: Optional[np.ndarray] = None,
    settings: Optional[NsDualSettings] = None,
) -> PrimalSolution:
    """Maximise expected utility over trading strategies.

    Supergradient ascent from ``theta0`` (zero by default), then an exact
    linear program for piecewise-linear utilities or a quasi-Newton polish.

    Returns:
        ``V(x)``, the optimal terminal wealth and strategy; ``satiated`` when
        ``V`` reaches ``U(inf)``
    """
    settings = settings or get_settings()
    theta = np.zeros(tree.n_holdings) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    iterations = settings.ascent_iterations

    if tree.n_holdings:
        theta = _supergradient_ascent(tree, utility, claim, x, theta, iterations)
        method = "ascent"
        if utility.is_piecewise_linear:
            exact = _polish_linear_program(tree, utility, claim, x)
            if exact is None:
                method = "lp-unbounded"
                theta = theta * DIVERGENCE
            else:
                theta, method = exact, "ascent+lp"
        else:
            theta, method = _polish_smooth(tree, utility, claim, x, theta), "ascent+quasi-newton"
    else:
        method = "static-market"

    strategy = Strategy.from_flat(tree, theta)
    wealth = terminal_wealth(tree, x, strategy)
    value = expected_utility(tree, utility, wealth, claim)

    sup = utility.supremum
    diverged = float(np.max(np.abs(theta))) >= DIVERGENCE if theta.size else False
    satiated = diverged or (math.isfinite(sup) and value >= sup - settings.tol_solve * (1.0 + abs(sup)))
    if diverged:
        value = sup
        logger.warning("Primal iterates diverged, reporting V(x) = U(inf)", supremum=sup)
    logger.info("Dynamic primal solved", value=value, method=method, satiated=satiated)
    return PrimalSolution(
        value=value,
        wealth=wealth,
        strategy=strategy,
        satiated=satiated,
        method=method,
        iterations=iterations,
    )


def solve_primal_static(
    tree: MarketTree,
    utility: Utility,
    claim: Claim,
    x: float,
    beta: float,
    polytope: Optional[MartingalePolytope] = None,
    settings: Optional[NsDualSettings] = None,
) -> PrimalSolution:
    """Maximise ``E U(X - B)`` over ``X`` with ``E_Q[X] <= x`` for every vertex Q.

    Wealth is kept above ``X - B >= max(-2β, domain_left)``.

    Raises:
        PreconditionError: If ``x <= 0`` or ``∥B∥_∞ > β``
    """
    settings = settings or get_settings()
    if not x > 0:
        raise PreconditionError(
            "The bounded-below route needs x > 0", details={"x": x}, field="x"
        )
    if claim.norm > beta + settings.tol_membership:
        raise PreconditionError(
            "Liability exceeds beta", details={"norm": claim.norm, "beta": beta}, field="beta"
        )
    polytope = polytope or martingale_polytope(tree, settings)
    floor = max(-2.0 * beta, utility.domain_left)
    m = tree.n_atoms
    lower = claim.payoff + floor

    if polytope.vertices is not None:
        budget_rows = polytope.vertices * tree.p[None, :]
        n_extra = 0
    else:
        budget_rows = None
        n_extra = tree.n_holdings

    if utility.is_piecewise_linear:
        c_pieces, s_pieces = utility.affine_pieces()
        n_var = m + n_extra + m
        cost = np.zeros(n_var)
        cost[m + n_extra :] = -tree.p
        rows, rhs = [], []
        for cj, sj in zip(c_pieces, s_pieces):
            block = np.zeros((m, n_var))
            block[:, :m] = -sj * np.eye(m)
            block[:, m + n_extra :] = np.eye(m)
            rows.append(block)
            rhs.append(cj - sj * claim.payoff)
        if budget_rows is not None:
            block = np.zeros((budget_rows.shape[0], n_var))
            block[:, :m] = budget_rows
            rows.append(block)
            rhs.append(np.full(budget_rows.shape[0], x))
        else:
            block = np.zeros((m, n_var))
            block[:, :m] = np.eye(m)
            block[:, m : m + n_extra] = -tree.increments
            rows.append(block)
            rhs.append(np.full(m, x))
        bounds = [(lo, None) for lo in lower] + [(None, None)] * (n_extra + m)
        res = linprog(cost, A_ub=np.vstack(rows), b_ub=np.concatenate(rhs), bounds=bounds, method="highs")
        if res.status != 0:
            raise SolverError(f"Static primal linear program failed: {res.message}")
        wealth = res.x[:m]
        method = "lp"
        iterations = int(res.nit)
    else:
        def fun(v: np.ndarray):
            wealth = v[:m] - claim.payoff
            value = -float(tree.p @ np.asarray(utility.value(wealth), dtype=float))
            slopes = np.nan_to_num(np.asarray(utility.slope(wealth), dtype=float), posinf=0.0, neginf=0.0)
            grad = np.zeros_like(v)
            grad[:m] = -tree.p * slopes
            return value, grad

        if budget_rows is not None:
            constraints = [{"type": "ineq", "fun": lambda v: x - budget_rows @ v, "jac": lambda v: -budget_rows}]
        else:
            link = np.hstack([-np.eye(m), tree.increments])
            constraints = [{"type": "ineq", "fun": lambda v: x - v[:m] + tree.increments @ v[m:], "jac": lambda v: link}]
        v0 = np.concatenate([np.maximum(np.full(m, float(x)), lower), np.zeros(n_extra)])
        bounds = [(lo, None) for lo in lower] + [(None, None)] * n_extra
        res = minimize(
            fun,
            v0,
            jac=True,
            method="SLSQP",
            bounds=bounds,
            constraints=constraints,
            options={"maxiter": 2000, "ftol": 1e-15},
        )
        if not np.all(np.isfinite(res.x)):
            raise SolverError(f"Static primal failed: {res.message}")
        wealth = np.maximum(res.x[:m], lower)
        method = "slsqp"
        iterations = int(res.nit)

    value = expected_utility(tree, utility, wealth, claim)
    floor_ok = bool(np.min(wealth - claim.payoff) >= -2.0 * beta - settings.tol_membership)
    sup = utility.supremum
    satiated = math.isfinite(sup) and value >= sup - settings.tol_solve * (1.0 + abs(sup))
    logger.info("Static primal solved", value=value, method=method, floor_ok=floor_ok)
    return PrimalSolution(
        value=value,
        wealth=wealth,
        satiated=satiated,
        method=method,
        iterations=iterations,
        floor_ok=floor_ok,
    )
