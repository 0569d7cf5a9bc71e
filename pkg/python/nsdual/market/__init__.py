"""Finite tree markets, martingale densities, superreplication and replication."""

from .generators import binomial_lattice, one_period, random_tree
from .polytope import (
    MartingalePolytope,
    dual_cone_bound,
    martingale_polytope,
    polytope_contains,
    price_bounds,
    superreplication_price,
)
from .replication import ReplicationResult, replicate
from .tree import (
    Claim,
    MarketTree,
    MartingaleDensity,
    Node,
    Strategy,
    conditional_expectation,
    martingale_residuals,
    membership_residual,
    node_masses,
    price_matrix,
    supermartingale_residuals,
    terminal_wealth,
    wealth_process,
)

__all__ = [
    "Claim",
    "MarketTree",
    "MartingaleDensity",
    "MartingalePolytope",
    "Node",
    "ReplicationResult",
    "Strategy",
    "binomial_lattice",
    "conditional_expectation",
    "dual_cone_bound",
    "martingale_polytope",
    "martingale_residuals",
    "membership_residual",
    "node_masses",
    "one_period",
    "polytope_contains",
    "price_bounds",
    "price_matrix",
    "random_tree",
    "replicate",
    "superreplication_price",
    "supermartingale_residuals",
    "terminal_wealth",
    "wealth_process",
]
