"""Builders for common markets and seeded random arbitrage-free trees."""

from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from ..exceptions import ValidationError
from .tree import MarketTree

PriceLike = Union[float, Sequence[float]]


def _prices(value: PriceLike) -> List[float]:
    return [float(v) for v in np.atleast_1d(np.asarray(value, dtype=float))]


def one_period(
    s0: PriceLike,
    outcomes: Sequence[PriceLike],
    probabilities: Optional[Sequence[float]] = None,
) -> MarketTree:
    """Single-period market with one atom per outcome (uniform P by default)."""
    if not outcomes:
        raise ValidationError("A one-period market needs at least one outcome")
    if probabilities is None:
        probabilities = [1.0 / len(outcomes)] * len(outcomes)
    if len(probabilities) != len(outcomes):
        raise ValidationError("One probability per outcome is required", field="probabilities")
    specs: List[Dict[str, Any]] = [{"id": "root", "parent": None, "prices": _prices(s0)}]
    for k, (s, prob) in enumerate(zip(outcomes, probabilities)):
        specs.append({"id": f"w{k}", "parent": "root", "probability": prob, "prices": _prices(s)})
    return MarketTree.from_nodes(specs)


def binomial_lattice(
    s0: float, up: float, down: float, periods: int, p_up: float = 0.5
) -> MarketTree:
    """Recombining binomial lattice expanded into an explicit tree.

    Node ids spell the path, e.g. ``"ud"`` is up then down; the root is ``"0"``.
    """
    if periods < 1:
        raise ValidationError("periods must be at least 1", field="periods")
    if not 0 < p_up < 1:
        raise ValidationError("p_up must lie in (0, 1)", field="p_up")
    specs: List[Dict[str, Any]] = [{"id": "0", "parent": None, "prices": [float(s0)]}]
    frontier = [("0", "", float(s0))]
    for _ in range(periods):
        nxt = []
        for node_id, path, price in frontier:
            for move, factor, prob in (("u", up, p_up), ("d", down, 1.0 - p_up)):
                child_path = path + move
                child_price = price * factor
                specs.append(
                    {"id": child_path, "parent": node_id, "probability": prob, "prices": [child_price]}
                )
                nxt.append((child_path, child_path, child_price))
        frontier = nxt
    return MarketTree.from_nodes(specs)


def random_tree(
    rng: np.random.Generator,
    periods: int = 1,
    branches: int = 3,
    assets: int = 1,
) -> MarketTree:
    """Random tree with an equivalent martingale measure by construction.

    At every node a strictly positive one-step measure ``q`` is drawn, returns
    are centred under ``q`` and scaled so that all prices stay positive.
    """
    if periods < 1 or branches < 2 or assets < 1:
        raise ValidationError(
            "random_tree needs periods >= 1, branches >= 2 and assets >= 1",
            details={"periods": periods, "branches": branches, "assets": assets},
        )
    s0 = rng.uniform(0.5, 2.0, size=assets)
    specs: List[Dict[str, Any]] = [{"id": "n0", "parent": None, "prices": s0.tolist()}]
    frontier = [("n0", s0)]
    counter = 1
    for _ in range(periods):
        nxt = []
        for node_id, prices in frontier:
            q = rng.dirichlet(np.ones(branches))
            prob = rng.dirichlet(np.full(branches, 2.0))
            returns = rng.normal(size=(branches, assets))
            returns -= q @ returns
            worst = float(np.max(-returns))
            if worst > 0:
                returns *= rng.uniform(0.2, 0.8) / worst
            for k in range(branches):
                child_id = f"n{counter}"
                counter += 1
                child_prices = prices * (1.0 + returns[k])
                specs.append(
                    {
                        "id": child_id,
                        "parent": node_id,
                        "probability": float(prob[k]),
                        "prices": child_prices.tolist(),
                    }
                )
                nxt.append((child_id, child_prices))
        frontier = nxt
    return MarketTree.from_nodes(specs)
