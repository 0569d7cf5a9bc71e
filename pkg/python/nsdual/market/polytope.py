"""The polytope of martingale densities and the prices it induces.

On a finite tree the absolutely continuous martingale measures form the
polytope ``{Z >= 0 : E[Z] = 1, E[Z·ΔS·1_ν] = 0 for every node ν}``. Its
vertices are the products of extreme one-step measures along the paths,
so they are enumerated node by node.
"""

import itertools
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import linprog

from ..config import NsDualSettings, get_settings
from ..exceptions import ArbitrageError, ErrorCode, SolverError
from ..logging import get_logger
from .tree import MarketTree, MartingaleDensity, membership_residual

logger = get_logger("market.polytope")

INTERIOR_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class MartingalePolytope:
    """Constraint system ``A_eq @ Z = b_eq, Z >= 0`` with optional vertex list."""

    a_eq: np.ndarray
    b_eq: np.ndarray
    interior: MartingaleDensity
    interior_margin: float
    vertices: Optional[np.ndarray]

    @property
    def has_vertices(self) -> bool:
        return self.vertices is not None

    @property
    def is_singleton(self) -> bool:
        return self.vertices is not None and self.vertices.shape[0] == 1


def _local_vertices(tree: MarketTree, node: int, tol: float) -> List[np.ndarray]:
    """Extreme martingale measures of the one-step market at ``node``."""
    here = tree.nodes[node]
    children = here.children
    k, d = len(children), tree.n_assets
    delta = np.vstack([tree.nodes[c].prices - here.prices for c in children])
    found: Dict[Tuple[float, ...], np.ndarray] = {}
    for size in range(1, min(k, d + 1) + 1):
        for support in itertools.combinations(range(k), size):
            system = np.vstack([np.ones(size), delta[list(support)].T])
            if np.linalg.matrix_rank(system) < size:
                continue
            rhs = np.zeros(d + 1)
            rhs[0] = 1.0
            sol, *_ = np.linalg.lstsq(system, rhs, rcond=None)
            if np.max(np.abs(system @ sol - rhs)) > tol or np.any(sol < -tol):
                continue
            q = np.zeros(k)
            q[list(support)] = np.maximum(sol, 0.0)
            q /= q.sum()
            found.setdefault(tuple(np.round(q, 12)), q)
    return list(found.values())


def _vertex_count(tree: MarketTree, local: Dict[int, List[np.ndarray]]) -> int:
    """Number of path products before deduplication."""
    count = np.ones(len(tree.nodes), dtype=object)
    for i in range(len(tree.nodes) - 1, -1, -1):
        node = tree.nodes[i]
        if node.is_terminal:
            continue
        total = 0
        for q in local[i]:
            prod = 1
            for c, w in zip(node.children, q):
                if w > 0:
                    prod *= count[c]
            total += prod
        count[i] = total
    return int(count[0])


def _enumerate_vertices(tree: MarketTree, local: Dict[int, List[np.ndarray]]) -> np.ndarray:
    dists: Dict[int, List[np.ndarray]] = {}
    for i in range(len(tree.nodes) - 1, -1, -1):
        node = tree.nodes[i]
        if node.is_terminal:
            e = np.zeros(tree.n_atoms)
            e[int(np.flatnonzero(tree.atoms == i)[0])] = 1.0
            dists[i] = [e]
            continue
        out = []
        for q in local[i]:
            active = [(c, w) for c, w in zip(node.children, q) if w > 0]
            for combo in itertools.product(*(dists[c] for c, _ in active)):
                out.append(sum(w * dist for (_, w), dist in zip(active, combo)))
        dists[i] = out
    z = np.vstack(dists[0]) / tree.p[None, :]
    _, keep = np.unique(np.round(z, 10), axis=0, return_index=True)
    return z[np.sort(keep)]


def _interior_point(tree: MarketTree, a_eq: np.ndarray, b_eq: np.ndarray) -> Tuple[np.ndarray, float]:
    """Maximise the smallest atom weight ``t`` over the polytope."""
    m = tree.n_atoms
    c = np.zeros(m + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-np.eye(m), np.ones((m, 1))])
    b_ub = np.zeros(m)
    a_eq_t = np.hstack([a_eq, np.zeros((a_eq.shape[0], 1))])
    bounds = [(0, None)] * m + [(None, 1.0 / float(np.min(tree.p)))]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq_t, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status == 2 or (res.status == 0 and -res.fun <= INTERIOR_FLOOR):
        raise ArbitrageError(
            "arbitrage: no equivalent martingale measure (M^e(S) = ∅)",
            details={"max_min_weight": None if res.status == 2 else float(-res.fun)},
        )
    if res.status != 0:
        raise SolverError(
            f"Interior-point linear program failed: {res.message}",
            error_code=ErrorCode.SOLVER_FAILED,
        )
    return res.x[:m], float(-res.fun)


def martingale_polytope(
    tree: MarketTree, settings: Optional[NsDualSettings] = None
) -> MartingalePolytope:
    """Constraint system, interior point and (when small enough) the vertices.

    Raises:
        ArbitrageError: If no strictly positive martingale density exists
    """
    settings = settings or get_settings()
    rows = tree.martingale_rows()
    a_eq = np.vstack([rows, tree.p[None, :]]) if rows.size else tree.p[None, :]
    b_eq = np.zeros(a_eq.shape[0])
    b_eq[-1] = 1.0

    z_int, margin = _interior_point(tree, a_eq, b_eq)

    local = {int(v): _local_vertices(tree, int(v), settings.tol_membership) for v in tree.nonterminal}
    count = _vertex_count(tree, local)
    vertices = None
    if count <= settings.vertex_cap:
        vertices = _enumerate_vertices(tree, local)
    else:
        logger.info("Vertex count above cap, keeping constraints only", count=count, cap=settings.vertex_cap)

    polytope = MartingalePolytope(
        a_eq=a_eq,
        b_eq=b_eq,
        interior=MartingaleDensity(z_int),
        interior_margin=margin,
        vertices=vertices,
    )
    logger.debug(
        "Built martingale polytope",
        atoms=tree.n_atoms,
        vertices=None if vertices is None else int(vertices.shape[0]),
        margin=margin,
    )
    return polytope


def polytope_contains(tree: MarketTree, z: np.ndarray, settings: Optional[NsDualSettings] = None) -> bool:
    settings = settings or get_settings()
    return membership_residual(tree, z) <= settings.tol_membership


def _max_expectation(tree: MarketTree, polytope: MartingalePolytope, values: np.ndarray) -> float:
    weighted = tree.p * values
    if polytope.vertices is not None:
        return float(np.max(polytope.vertices @ weighted))
    res = linprog(
        -weighted,
        A_eq=polytope.a_eq,
        b_eq=polytope.b_eq,
        bounds=[(0, None)] * tree.n_atoms,
        method="highs",
    )
    if res.status != 0:
        raise SolverError(f"Superreplication linear program failed: {res.message}")
    return float(-res.fun)


def superreplication_price(
    tree: MarketTree,
    payoff: np.ndarray,
    polytope: Optional[MartingalePolytope] = None,
    settings: Optional[NsDualSettings] = None,
) -> float:
    """``sup_Q E_Q[X]`` over the martingale polytope."""
    polytope = polytope or martingale_polytope(tree, settings)
    return _max_expectation(tree, polytope, np.asarray(payoff, dtype=float))


def price_bounds(
    tree: MarketTree,
    payoff: np.ndarray,
    polytope: Optional[MartingalePolytope] = None,
    settings: Optional[NsDualSettings] = None,
) -> Tuple[float, float]:
    """No-arbitrage interval ``(inf_Q E_Q[X], sup_Q E_Q[X])``."""
    polytope = polytope or martingale_polytope(tree, settings)
    values = np.asarray(payoff, dtype=float)
    return -_max_expectation(tree, polytope, -values), _max_expectation(tree, polytope, values)


def dual_cone_bound(tree: MarketTree, y: np.ndarray) -> float:
    """``sup{E[XY] : X ∈ X₊(1)}`` for a nonnegative ``Y``.

    With ``E[Y] = 1`` the bound is at most one exactly when ``Y`` is a
    martingale density; ``inf`` is returned when the program is unbounded.
    """
    y = np.asarray(y, dtype=float)
    base = float(tree.p @ y)
    if tree.n_holdings == 0:
        return base
    weighted = tree.increments.T @ (tree.p * y)
    res = linprog(
        -weighted,
        A_ub=-tree.increments,
        b_ub=np.ones(tree.n_atoms),
        bounds=[(None, None)] * tree.n_holdings,
        method="highs",
    )
    if res.status == 3:
        return float("inf")
    if res.status != 0:
        raise SolverError(f"Dual cone linear program failed: {res.message}")
    return base - float(res.fun)
