"""Uniqueness checks for primal and dual optimisers."""

from typing import List, Optional

import numpy as np
from scipy.optimize import linprog

from ..config import NsDualSettings, get_settings
from ..convex.conjugate import ConjugateFunction
from ..convex.utility import Utility
from ..logging import get_logger
from ..market.polytope import MartingalePolytope, martingale_polytope
from ..market.tree import Claim, MarketTree
from .dual import dual_objective
from .models import UniquenessReport
from .primal import solve_primal_dynamic

logger = get_logger("solvers.uniqueness")

FACE_SLACK = 1e-9
RANK_TOL = 1e-7


def _primal_face_widths(
    tree: MarketTree, utility: Utility, claim: Claim, x: float, value: float
) -> List[float]:
    """Range of each ``X_ω`` over strategies within ``FACE_SLACK`` of ``V``."""
    c_pieces, s_pieces = utility.affine_pieces()
    g_mat = tree.increments
    m, h = tree.n_atoms, tree.n_holdings
    base = x - claim.payoff
    rows, rhs = [], []
    for cj, sj in zip(c_pieces, s_pieces):
        rows.append(np.hstack([-sj * g_mat, np.eye(m)]))
        rhs.append(cj + sj * base)
    if np.isfinite(utility.domain_left):
        rows.append(np.hstack([-g_mat, np.zeros((m, m))]))
        rhs.append(base - utility.domain_left)
    rows.append(np.concatenate([np.zeros(h), -tree.p])[None, :])
    rhs.append(np.array([-(value - FACE_SLACK * (1.0 + abs(value)))]))
    a_ub, b_ub = np.vstack(rows), np.concatenate(rhs)
    bounds = [(None, None)] * (h + m)
    widths = []
    for k in range(m):
        objective = np.concatenate([g_mat[k], np.zeros(m)])
        low = linprog(objective, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
        high = linprog(-objective, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
        if low.status != 0 or high.status != 0:
            widths.append(float("inf"))
        else:
            widths.append(float(-high.fun - low.fun))
    return widths


def _dual_face(
    tree: MarketTree,
    conj: ConjugateFunction,
    claim: Claim,
    x: float,
    value: float,
    polytope: MartingalePolytope,
    rng: np.random.Generator,
) -> np.ndarray:
    """Extreme points of the optimal dual face hit by random linear functionals."""
    a, b = conj.pieces()
    m = tree.n_atoms
    lo, hi = conj.domain
    eye = np.eye(m)
    rows = [np.hstack([bi * eye, -eye]) for bi in b]
    rhs = [np.full(m, -ai) for ai in a]
    rows.append(np.concatenate([tree.p * (x - claim.payoff), tree.p])[None, :])
    rhs.append(np.array([value + FACE_SLACK * (1.0 + abs(value))]))
    a_ub, b_ub = np.vstack(rows), np.concatenate(rhs)
    mart = polytope.a_eq[:-1]
    a_eq = np.hstack([mart, np.zeros_like(mart)]) if mart.size else None
    b_eq = np.zeros(mart.shape[0]) if mart.size else None
    upper = None if np.isinf(hi) else hi
    bounds = [(max(lo, 0.0), upper)] * m + [(None, None)] * m
    points = []
    for _ in range(2 * m):
        direction = np.concatenate([rng.normal(size=m), np.zeros(m)])
        for sign in (1.0, -1.0):
            res = linprog(sign * direction, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
            if res.status == 0:
                points.append(res.x[:m])
    return np.vstack(points) if points else np.zeros((0, m))


def uniqueness_probe(
    tree: MarketTree,
    utility: Utility,
    conj: ConjugateFunction,
    claim: Claim,
    x: float,
    dual_y: np.ndarray,
    perturbations: int = 5,
    seed: int = 0,
    polytope: Optional[MartingalePolytope] = None,
    settings: Optional[NsDualSettings] = None,
) -> UniquenessReport:
    """Re-solve the primal from perturbed starts and measure the dual face.

    The primal spread is the largest atomwise deviation of ``X*`` across
    starts. For piecewise-linear utilities the exact face widths come from
    linear programs; for piecewise-affine conjugates the optimal dual face is
    explored with random linear functionals, its dimension is the rank of the
    differences between the extreme points found and its reported centre is
    their barycentre. Flat atoms are those where ``∂Ũ(Y*)`` is a nondegenerate
    interval.
    """
    settings = settings or get_settings()
    polytope = polytope or martingale_polytope(tree, settings)
    rng = np.random.default_rng(seed)

    reference = solve_primal_dynamic(tree, utility, claim, x, settings=settings)
    spread = 0.0
    for _ in range(perturbations):
        theta0 = rng.normal(scale=1.0, size=tree.n_holdings)
        other = solve_primal_dynamic(tree, utility, claim, x, theta0=theta0, settings=settings)
        spread = max(spread, float(np.max(np.abs(other.wealth - reference.wealth))))

    widths = None
    primal_unique = spread <= 1e-6
    if utility.is_piecewise_linear and tree.n_holdings:
        widths = _primal_face_widths(tree, utility, claim, x, reference.value)
        primal_unique = max(widths) <= 1e-6

    dual_y = np.maximum(np.asarray(dual_y, dtype=float), 0.0)
    lo, hi = conj.subdiff_bounds(dual_y)
    flat = [int(k) for k in np.flatnonzero(np.isfinite(lo) & np.isfinite(hi) & (hi - lo > 1e-9))]

    dimension = 0
    center = None
    if conj.pieces() is not None:
        value = dual_objective(tree, conj, claim, x, dual_y)
        face = _dual_face(tree, conj, claim, x, value, polytope, rng)
        if face.shape[0] > 1:
            dimension = int(np.linalg.matrix_rank(face[1:] - face[0], tol=RANK_TOL))
        if face.shape[0]:
            center = [float(v) for v in face.mean(axis=0)]

    report = UniquenessReport(
        primal_spread=spread,
        primal_unique=primal_unique,
        primal_face_widths=widths,
        dual_face_dimension=dimension,
        dual_face_center=center,
        flat_atoms=flat,
        dual_unique=dimension == 0,
    )
    logger.info(
        "Uniqueness check finished",
        primal_spread=spread,
        dual_face_dimension=dimension,
        flat_atoms=len(flat),
    )
    return report
