"""Exact replication of claims under an equivalent martingale measure."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..config import NsDualSettings, get_settings
from ..exceptions import ErrorCode, PreconditionError
from ..logging import get_logger
from .tree import MarketTree, MartingaleDensity, Strategy, conditional_expectation

logger = get_logger("market.replication")


@dataclass(frozen=True, eq=False)
class ReplicationResult:
    """Least-squares hedge of a claim along the Q-conditional expectations."""

    strategy: Strategy
    node_values: np.ndarray
    residuals: np.ndarray
    cost: float
    replicable: bool

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if self.residuals.size else 0.0


def replicate(
    tree: MarketTree,
    density: MartingaleDensity,
    payoff: np.ndarray,
    settings: Optional[NsDualSettings] = None,
) -> ReplicationResult:
    """Backward recursion ``M_ν = E_Q[X | ν]`` and one-step least squares.

    At every non-terminal node ``θ·(S_c - S_ν) = M_c - M_ν`` is solved over the
    node's children; the per-node residual is the largest branch mismatch.

    Raises:
        PreconditionError: If ``Z`` vanishes on some atom
    """
    settings = settings or get_settings()
    if not density.equivalent:
        raise PreconditionError(
            "Replication needs a strictly positive density",
            error_code=ErrorCode.PRECONDITION_FAILED,
            details={"min_weight": float(np.min(density.weights))},
        )
    payoff = np.asarray(payoff, dtype=float)
    values = conditional_expectation(tree, density.weights, payoff)

    holdings = np.zeros((tree.nonterminal.size, tree.n_assets))
    residuals = np.zeros(tree.nonterminal.size)
    for k, v in enumerate(tree.nonterminal):
        node = tree.nodes[v]
        children = list(node.children)
        delta = np.vstack([tree.nodes[c].prices - node.prices for c in children])
        target = values[children] - values[v]
        theta, *_ = np.linalg.lstsq(delta, target, rcond=None)
        holdings[k] = theta
        residuals[k] = float(np.max(np.abs(delta @ theta - target)))

    scale = 1.0 + (float(np.max(np.abs(payoff))) if payoff.size else 0.0)
    replicable = bool(np.all(residuals <= settings.tol_replication * scale))
    result = ReplicationResult(
        strategy=Strategy(holdings),
        node_values=values,
        residuals=residuals,
        cost=float(values[0]),
        replicable=replicable,
    )
    logger.debug(
        "Replicated claim",
        cost=result.cost,
        max_residual=result.max_residual,
        replicable=replicable,
    )
    return result
