"""The dual problem as a search over measures.

``Ṽ(y) = inf_Z E[Ũ(yZ) - yZ·B]`` over martingale densities Z, and
``W(x) = inf_{y >= 0} Ṽ(y) + x·y``. The inner problem works directly on the
density with the polytope's equality constraints, the outer one is a bounded
one-dimensional search, so nothing is shared with :func:`solve_dual` beyond
the conjugate itself.
"""

import math
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog, minimize, minimize_scalar

from ..config import NsDualSettings, get_settings
from ..convex.conjugate import ConjugateFunction
from ..exceptions import ErrorCode, SolverError, UnboundedProblemError
from ..logging import get_logger
from ..market.polytope import MartingalePolytope, martingale_polytope
from ..market.tree import Claim, MarketTree
from ..moreau.infconv import InfConvolution
from .models import DualSolution

logger = get_logger("solvers.measures")

# Smoothing of the inner density search; the reported value uses the exact conjugate.
INNER_LEVEL = 1e4
INNER_MAXITER = 200


class DualValueFunction:
    """``y ↦ Ṽ(y)`` with the minimising density of the last evaluation."""

    def __init__(
        self,
        tree: MarketTree,
        conj: ConjugateFunction,
        claim: Claim,
        polytope: Optional[MartingalePolytope] = None,
        settings: Optional[NsDualSettings] = None,
    ):
        self.tree = tree
        self.conj = conj
        self.claim = claim
        self.settings = settings or get_settings()
        self.polytope = polytope or martingale_polytope(tree, self.settings)
        level = min(max(self.settings.smoothing_levels), INNER_LEVEL)
        self.smooth = InfConvolution(conj, level, 0.0, self.settings)
        self._z = self.polytope.interior.weights.copy()
        self.logger = get_logger("solvers.dual_value")

    def _exact(self, y: float, z: np.ndarray) -> float:
        yz = y * z
        values = np.asarray(self.conj.value(yz), dtype=float) - yz * self.claim.payoff
        return float(self.tree.p @ values)

    def _inner_lp(self, y: float) -> Tuple[float, Optional[np.ndarray]]:
        a, b = self.conj.pieces()
        tree, m = self.tree, self.tree.n_atoms
        lo, hi = self.conj.domain
        c = np.concatenate([-y * tree.p * self.claim.payoff, tree.p])
        eye = np.eye(m)
        a_ub = np.vstack([np.hstack([bi * y * eye, -eye]) for bi in b])
        b_ub = np.concatenate([np.full(m, -ai) for ai in a])
        a_eq = np.hstack([self.polytope.a_eq, np.zeros_like(self.polytope.a_eq)])
        z_lo = max(lo, 0.0) / y
        z_hi = None if math.isinf(hi) else hi / y
        bounds = [(z_lo, z_hi)] * m + [(None, None)] * m
        res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=self.polytope.b_eq, bounds=bounds, method="highs")
        if res.status == 2:
            return math.inf, None
        if res.status != 0:
            raise SolverError(f"Inner measure linear program failed: {res.message}")
        return float(res.fun), res.x[:m]

    def _inner_smooth(self, y: float) -> Tuple[float, np.ndarray]:
        tree = self.tree
        weights = tree.p
        a_eq, b_eq = self.polytope.a_eq, self.polytope.b_eq

        def fun(z: np.ndarray) -> Tuple[float, np.ndarray]:
            value, deriv, _ = self.smooth.evaluate(y * z)
            f = float(weights @ (value - y * z * self.claim.payoff))
            return f, y * weights * (deriv - self.claim.payoff)

        res = minimize(
            fun,
            self._z,
            jac=True,
            method="SLSQP",
            bounds=[(0.0, None)] * tree.n_atoms,
            constraints=[{"type": "eq", "fun": lambda z: a_eq @ z - b_eq, "jac": lambda z: a_eq}],
            options={"maxiter": INNER_MAXITER, "ftol": 1e-12},
        )
        z = np.maximum(res.x, 0.0)
        z /= float(weights @ z)
        return self._exact(y, z), z

    def __call__(self, y: float) -> float:
        if y < 0:
            return math.inf
        if y == 0:
            return float(self.conj.value(0.0))
        if self.conj.pieces() is not None:
            value, z = self._inner_lp(y)
        else:
            value, z = self._inner_smooth(y)
        if z is not None:
            self._z = z
        return value

    @property
    def last_density(self) -> np.ndarray:
        return self._z


def _feasible_y_range(
    tree: MarketTree, conj: ConjugateFunction, polytope: MartingalePolytope
) -> Tuple[float, float]:
    """Range of ``y = E[W]`` with ``W`` in the cone and inside the conjugate's domain."""
    lo, hi = conj.domain
    if lo <= 0 and math.isinf(hi):
        return 0.0, math.inf
    rows = polytope.a_eq[:-1]
    a_eq = rows if rows.size else None
    b_eq = np.zeros(rows.shape[0]) if rows.size else None
    bounds = [(max(lo, 0.0), None if math.isinf(hi) else hi)] * tree.n_atoms
    low = linprog(tree.p, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if low.status != 0:
        raise SolverError("The conjugate's domain misses the martingale cone", error_code=ErrorCode.SOLVER_FAILED)
    if math.isinf(hi):
        return float(low.fun), math.inf
    high = linprog(-tree.p, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    return float(low.fun), float(-high.fun)


def dual_over_measures(
    tree: MarketTree,
    conj: ConjugateFunction,
    claim: Claim,
    x: float,
    polytope: Optional[MartingalePolytope] = None,
    settings: Optional[NsDualSettings] = None,
) -> DualSolution:
    """``W(x) = inf_y Ṽ(y) + x·y`` by a bounded scalar search over ``y``.

    Raises:
        UnboundedProblemError: If ``Ṽ(y) + x·y`` keeps decreasing as y grows
    """
    settings = settings or get_settings()
    polytope = polytope or martingale_polytope(tree, settings)
    curve = DualValueFunction(tree, conj, claim, polytope, settings)
    y_min, y_max = _feasible_y_range(tree, conj, polytope)

    def h(y: float) -> float:
        return curve(y) + x * y

    upper = y_max
    if math.isinf(upper):
        start = max(1.0, 2.0 * y_min)
        upper = start
        current = h(upper)
        for _ in range(80):
            nxt = h(2.0 * upper)
            if nxt > current:
                break
            upper, current = 2.0 * upper, nxt
        else:
            raise UnboundedProblemError(
                "W(x) = -inf: the dual value keeps decreasing in y", details={"y": upper}
            )
        upper *= 2.0

    res = minimize_scalar(h, bounds=(y_min, upper), method="bounded", options={"xatol": 1e-10})
    y_star, value = float(res.x), float(res.fun)
    for edge in (y_min, upper):
        edge_value = h(edge)
        if edge_value < value:
            y_star, value = edge, edge_value
    h(y_star)
    z = curve.last_density if y_star > 0 else np.zeros(tree.n_atoms)
    logger.info("Dual over measures solved", value=value, y=y_star, iterations=int(res.nfev))
    return DualSolution(
        value=value, y=y_star, Y=y_star * z, method="measures", iterations=int(res.nfev)
    )


def dual_value_curve(
    tree: MarketTree,
    conj: ConjugateFunction,
    claim: Claim,
    ys: Sequence[float],
    polytope: Optional[MartingalePolytope] = None,
    settings: Optional[NsDualSettings] = None,
) -> np.ndarray:
    """``Ṽ(y)`` at each ``y`` in ``ys``."""
    curve = DualValueFunction(tree, conj, claim, polytope, settings)
    return np.array([curve(float(y)) for y in ys])
