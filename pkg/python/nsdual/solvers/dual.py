"""Dual solver: minimise ``E[Ũ(W) - W·B] + x·E[W]`` over the martingale cone.

The cone ``{y·Z : y >= 0, Z in the polytope}`` is parameterised by its rays,
``W = Vᵀλ`` with ``λ >= 0`` over the polytope vertices ``V``. The objective is
smoothed by the inf-convolution ladder and minimised level by level with
warm starts; nonsmooth piecewise-affine conjugates finish with an exact
linear program over the same cone.
"""

import math
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.optimize import linprog, minimize

from ..config import NsDualSettings, get_settings
from ..convex.conjugate import ConjugateFunction
from ..exceptions import ErrorCode, SolverError, UnboundedProblemError
from ..logging import get_logger
from ..market.polytope import MartingalePolytope, martingale_polytope
from ..market.tree import Claim, MarketTree
from ..moreau.infconv import InfConvolution
from .models import DualSolution, LadderKind, LadderPoint, LadderTrace

logger = get_logger("solvers.dual")

EXPLOSION = 1e12


def dual_objective(
    tree: MarketTree, conj: ConjugateFunction, claim: Claim, x: float, w: np.ndarray
) -> float:
    """Unsmoothed ``E[Ũ(W) - W·B] + x·E[W]``."""
    w = np.asarray(w, dtype=float)
    values = np.asarray(conj.value(w), dtype=float) - w * claim.payoff + x * w
    return float(tree.p @ values)


def _check_finite(w: np.ndarray, value: float, level: float) -> None:
    if not math.isfinite(value) or float(np.max(np.abs(w))) > EXPLOSION:
        raise UnboundedProblemError(
            "W(x) = -inf: the dual objective is unbounded below",
            details={"level": level, "value": value},
        )


def _ray_objective(
    tree: MarketTree, smooth: InfConvolution, claim: Claim, x: float, rays: np.ndarray
) -> Callable[[np.ndarray], Tuple[float, np.ndarray]]:
    weights = tree.p

    def fun(lam: np.ndarray) -> Tuple[float, np.ndarray]:
        w = rays.T @ lam
        value, deriv, _ = smooth.evaluate(w)
        f = float(weights @ (value - w * claim.payoff + x * w))
        grad = rays @ (weights * (deriv - claim.payoff + x))
        return f, grad

    return fun


def _minimize_rays(
    fun: Callable[[np.ndarray], Tuple[float, np.ndarray]], lam0: np.ndarray
) -> Tuple[np.ndarray, int]:
    res = minimize(
        fun,
        lam0,
        jac=True,
        method="L-BFGS-B",
        bounds=[(0.0, None)] * lam0.size,
        options={"maxiter": 5000, "ftol": 1e-15, "gtol": 1e-11},
    )
    return np.maximum(res.x, 0.0), int(res.nit)


def _minimize_constrained(
    tree: MarketTree,
    polytope: MartingalePolytope,
    smooth: InfConvolution,
    claim: Claim,
    x: float,
    w0: np.ndarray,
) -> Tuple[np.ndarray, int]:
    """Same level without vertices: ``W >= 0`` with the martingale rows."""
    rows = polytope.a_eq[:-1]
    weights = tree.p

    def fun(w: np.ndarray) -> Tuple[float, np.ndarray]:
        value, deriv, _ = smooth.evaluate(w)
        return float(weights @ (value - w * claim.payoff + x * w)), weights * (deriv - claim.payoff + x)

    constraints = []
    if rows.size:
        constraints.append({"type": "eq", "fun": lambda w: rows @ w, "jac": lambda w: rows})
    res = minimize(
        fun,
        w0,
        jac=True,
        method="SLSQP",
        bounds=[(0.0, None)] * w0.size,
        constraints=constraints,
        options={"maxiter": 1000, "ftol": 1e-14},
    )
    return np.maximum(res.x, 0.0), int(res.nit)


def _exact_linear_program(
    tree: MarketTree, polytope: MartingalePolytope, conj: ConjugateFunction, claim: Claim, x: float
) -> np.ndarray:
    """Exact minimiser for a piecewise-affine conjugate.

    Variables ``(W, t)`` with ``t >= a_i + b_i·W`` atomwise, the martingale
    rows on ``W`` and ``W`` inside the conjugate's domain.
    """
    a, b = conj.pieces()
    m = tree.n_atoms
    lo, hi = conj.domain
    c = np.concatenate([tree.p * (x - claim.payoff), tree.p])
    blocks = []
    rhs = []
    eye = np.eye(m)
    for ai, bi in zip(a, b):
        blocks.append(np.hstack([bi * eye, -eye]))
        rhs.append(np.full(m, -ai))
    a_ub = np.vstack(blocks)
    b_ub = np.concatenate(rhs)
    rows = polytope.a_eq[:-1]
    a_eq = np.hstack([rows, np.zeros_like(rows)]) if rows.size else None
    b_eq = np.zeros(rows.shape[0]) if rows.size else None
    upper = None if math.isinf(hi) else hi
    bounds = [(max(lo, 0.0), upper)] * m + [(None, None)] * m
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status == 3:
        raise UnboundedProblemError("W(x) = -inf: the dual linear program is unbounded")
    if res.status != 0:
        raise SolverError(
            f"Dual linear program failed: {res.message}", error_code=ErrorCode.SOLVER_FAILED
        )
    return res.x[:m]


def _exact_polish(
    tree: MarketTree, conj: ConjugateFunction, claim: Claim, x: float, rays: np.ndarray, lam: np.ndarray
) -> np.ndarray:
    """L-BFGS-B on the unsmoothed objective, kept only if it improves."""
    weights = tree.p

    def fun(l: np.ndarray) -> Tuple[float, np.ndarray]:
        w = rays.T @ l
        f = dual_objective(tree, conj, claim, x, w)
        deriv = np.nan_to_num(np.asarray(conj.derivative(w), dtype=float), neginf=-1e8, posinf=1e8)
        grad = rays @ (weights * (deriv - claim.payoff + x))
        if not math.isfinite(f):
            return 1e300, grad
        return f, grad

    start = fun(lam)[0]
    res = minimize(
        fun,
        lam,
        jac=True,
        method="L-BFGS-B",
        bounds=[(0.0, None)] * lam.size,
        options={"maxiter": 2000, "ftol": 1e-15, "gtol": 1e-12},
    )
    if math.isfinite(res.fun) and res.fun < start:
        return np.maximum(res.x, 0.0)
    return lam


def solve_dual(
    tree: MarketTree,
    conj: ConjugateFunction,
    claim: Claim,
    x: float,
    beta: float = 0.0,
    polytope: Optional[MartingalePolytope] = None,
    settings: Optional[NsDualSettings] = None,
) -> DualSolution:
    """Minimise the dual objective by the smoothing ladder.

    Each level minimises the smoothed objective with L-BFGS-B over nonnegative
    weights on the polytope's extreme densities, so feasibility holds by
    construction and no projection is needed. Without a vertex list SLSQP runs
    on the atomwise weights with the martingale rows as equality constraints.
    The last iterate is then replaced by an exact linear program for
    piecewise-affine conjugates or polished with L-BFGS-B on the unsmoothed
    objective. Every level's reported value is its smoothed objective minimised
    over all iterates of the ladder, which makes the trace exactly monotone.

    Args:
        tree: Market
        conj: Conjugate Ũ of the (normalised) utility
        claim: Liability B
        x: Initial capital
        beta: Offset β of the inf-convolution
        polytope: Precomputed martingale polytope
        settings: Smoothing levels and tolerances

    Returns:
        ``W(x)`` evaluated with the unsmoothed conjugate, ``(y*, Y*)`` and the
        ladder trace of smoothed optimal values

    Raises:
        UnboundedProblemError: If the objective is unbounded below
        ArbitrageError: If the martingale polytope is empty
    """
    settings = settings or get_settings()
    polytope = polytope or martingale_polytope(tree, settings)
    levels = settings.smoothing_levels

    trace = LadderTrace(kind=LadderKind.SMOOTHING)
    candidates = []
    iterations = 0
    rays = polytope.vertices
    lam = None
    w = polytope.interior.weights.copy()
    if rays is not None:
        lam = np.full(rays.shape[0], 1.0 / rays.shape[0])
        w = rays.T @ lam

    for n in levels:
        smooth = InfConvolution(conj, n, beta, settings)
        try:
            if rays is not None:
                lam, nit = _minimize_rays(_ray_objective(tree, smooth, claim, x, rays), lam)
                w = rays.T @ lam
            else:
                w, nit = _minimize_constrained(tree, polytope, smooth, claim, x, w)
        except (ValueError, FloatingPointError) as e:
            logger.error("Dual ladder level failed", level=n, error=str(e), exc_info=True)
            raise SolverError(f"Dual solve failed at smoothing level {n}: {e}") from e
        iterations += nit
        value = float(tree.p @ (smooth.value(w) - w * claim.payoff + x * w))
        _check_finite(w, value, n)
        candidates.append(w.copy())
        trace.points.append(LadderPoint(n=n, dual=value))
        logger.info("Dual ladder level solved", level=n, value=value, iterations=nit)

    method = "smoothing"
    if conj.pieces() is not None:
        w = _exact_linear_program(tree, polytope, conj, claim, x)
        method = "smoothing+lp"
    elif rays is not None:
        lam = _exact_polish(tree, conj, claim, x, rays, lam)
        w = rays.T @ lam
        method = "smoothing+polish"

    w = np.maximum(w, 0.0)
    final = dual_objective(tree, conj, claim, x, w)
    _check_finite(w, final, math.inf)

    candidates.append(w)
    for point in trace.points:
        smooth = InfConvolution(conj, point.n, beta, settings)
        for c in candidates:
            value = float(tree.p @ (smooth.value(c) - c * claim.payoff + x * c))
            if value < point.dual:
                point.dual = value
    trace.settle(upper=final)
    trace.reference = final
    trace.final_gap = abs(final - trace.points[-1].dual) if trace.points else None

    y = float(tree.p @ w)
    if y <= settings.tol_solve:
        y, w = 0.0, np.zeros_like(w)
    logger.info("Dual solved", value=final, y=y, method=method, monotone=trace.monotone)
    return DualSolution(value=final, y=y, Y=w, trace=trace, method=method, iterations=iterations)
