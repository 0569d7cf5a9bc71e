"""Finite event-tree markets.

A :class:`MarketTree` is an explicit list of nodes. Every node carries its
branch probability under P and a strictly positive price vector; terminal
nodes are the atoms of Ω, numbered in node order. Parents must be listed
before their children.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..exceptions import ErrorCode, ValidationError
from ..logging import get_logger

logger = get_logger("market.tree")

PROBABILITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Node:
    """One node of the event tree."""

    id: str
    t: int
    parent: Optional[int]
    probability: float
    prices: np.ndarray
    children: Tuple[int, ...] = ()

    @property
    def is_terminal(self) -> bool:
        return not self.children


@dataclass(frozen=True, eq=False)
class MarketTree:
    """Immutable finite tree market with ``d`` risky assets.

    Attributes:
        nodes: Nodes in construction order (parents before children)
        atoms: Indices of terminal nodes; atom ``k`` is ``nodes[atoms[k]]``
        p: Probability of each atom under P
        nonterminal: Indices of nodes where holdings are chosen
        increments: Matrix ``G`` with ``X_T = x + G @ θ`` for flattened θ
    """

    nodes: Tuple[Node, ...]
    atoms: np.ndarray
    p: np.ndarray
    nonterminal: np.ndarray
    increments: np.ndarray
    paths: Tuple[Tuple[int, ...], ...]
    _column: Dict[int, int] = field(repr=False)

    @classmethod
    def from_nodes(cls, specs: Sequence[Mapping[str, Any]]) -> "MarketTree":
        """Build a tree from node records.

        Each record has ``id``, ``parent`` (``None`` for the root), ``probability``
        (the branch probability from the parent, ignored for the root) and
        ``prices``.

        Raises:
            ValidationError: If the records do not describe a valid tree
        """
        if not specs:
            raise ValidationError("A market tree needs at least one node", error_code=ErrorCode.INVALID_TREE)

        index: Dict[str, int] = {}
        raw: List[Dict[str, Any]] = []
        dim: Optional[int] = None
        for i, spec in enumerate(specs):
            node_id = str(spec["id"])
            if node_id in index:
                raise ValidationError(
                    f"Duplicate node id {node_id!r}", error_code=ErrorCode.INVALID_TREE, field="nodes"
                )
            prices = np.atleast_1d(np.asarray(spec["prices"], dtype=float))
            if dim is None:
                dim = prices.size
            if prices.ndim != 1 or prices.size != dim or dim == 0:
                raise ValidationError(
                    f"Node {node_id!r} has {prices.size} prices, expected {dim}",
                    error_code=ErrorCode.INVALID_TREE,
                )
            if not np.all(np.isfinite(prices)) or np.any(prices <= 0):
                raise ValidationError(
                    f"Prices at node {node_id!r} must be finite and strictly positive",
                    error_code=ErrorCode.INVALID_TREE,
                    details={"prices": prices.tolist()},
                )
            parent_id = spec.get("parent")
            if parent_id is None:
                if i != 0:
                    raise ValidationError(
                        "The root must be the first node and the only one without a parent",
                        error_code=ErrorCode.INVALID_TREE,
                    )
                parent, t, prob = None, 0, 1.0
            else:
                parent_id = str(parent_id)
                if parent_id not in index:
                    raise ValidationError(
                        f"Parent {parent_id!r} of node {node_id!r} must be listed before it",
                        error_code=ErrorCode.INVALID_TREE,
                    )
                parent = index[parent_id]
                t = raw[parent]["t"] + 1
                prob = float(spec["probability"])
                if not prob > 0:
                    raise ValidationError(
                        f"Branch probability of node {node_id!r} must be strictly positive",
                        error_code=ErrorCode.INVALID_TREE,
                    )
            index[node_id] = i
            raw.append({"id": node_id, "t": t, "parent": parent, "probability": prob, "prices": prices, "children": []})
            if parent is not None:
                raw[parent]["children"].append(i)

        for rec in raw:
            if rec["children"]:
                total = sum(raw[c]["probability"] for c in rec["children"])
                if abs(total - 1.0) > PROBABILITY_TOL:
                    raise ValidationError(
                        f"Branch probabilities at node {rec['id']!r} sum to {total}, not 1",
                        error_code=ErrorCode.INVALID_TREE,
                    )

        nodes = tuple(
            Node(
                id=rec["id"],
                t=rec["t"],
                parent=rec["parent"],
                probability=rec["probability"],
                prices=rec["prices"],
                children=tuple(rec["children"]),
            )
            for rec in raw
        )
        return cls._assemble(nodes)

    @classmethod
    def _assemble(cls, nodes: Tuple[Node, ...]) -> "MarketTree":
        atoms = np.array([i for i, n in enumerate(nodes) if n.is_terminal], dtype=int)
        nonterminal = np.array([i for i, n in enumerate(nodes) if not n.is_terminal], dtype=int)
        column = {int(v): k for k, v in enumerate(nonterminal)}
        d = nodes[0].prices.size

        paths = []
        p = np.ones(atoms.size)
        for k, a in enumerate(atoms):
            path = [int(a)]
            while nodes[path[-1]].parent is not None:
                p[k] *= nodes[path[-1]].probability
                path.append(nodes[path[-1]].parent)
            paths.append(tuple(reversed(path)))

        increments = np.zeros((atoms.size, nonterminal.size * d))
        for k, path in enumerate(paths):
            for here, nxt in zip(path[:-1], path[1:]):
                col = column[here] * d
                increments[k, col : col + d] = nodes[nxt].prices - nodes[here].prices

        tree = cls(
            nodes=nodes,
            atoms=atoms,
            p=p,
            nonterminal=nonterminal,
            increments=increments,
            paths=tuple(paths),
            _column=column,
        )
        logger.debug("Built market tree", nodes=len(nodes), atoms=int(atoms.size), assets=d)
        return tree

    @property
    def n_atoms(self) -> int:
        return int(self.atoms.size)

    @property
    def n_assets(self) -> int:
        return int(self.nodes[0].prices.size)

    @property
    def horizon(self) -> int:
        return max(n.t for n in self.nodes)

    @property
    def n_holdings(self) -> int:
        """Length of a flattened strategy vector."""
        return int(self.nonterminal.size * self.n_assets)

    def column(self, node: int) -> int:
        """Row of ``node`` in a :class:`Strategy` holdings matrix."""
        return self._column[node]

    def atom_ids(self) -> List[str]:
        return [self.nodes[a].id for a in self.atoms]

    def martingale_rows(self) -> np.ndarray:
        """Rows ``A`` with ``A @ Z = 0`` iff ``Z·P`` makes S a martingale."""
        return (self.increments * self.p[:, None]).T

    def expectation(self, values: np.ndarray) -> float:
        """``E_P`` of a per-atom vector."""
        return float(self.p @ np.asarray(values, dtype=float))

    def to_frame(self) -> pd.DataFrame:
        """One row per node: id, time, parent id, branch probability and prices."""
        rows = []
        for n in self.nodes:
            row = {
                "node": n.id,
                "t": n.t,
                "parent": self.nodes[n.parent].id if n.parent is not None else "",
                "probability": n.probability,
            }
            for k, s in enumerate(n.prices):
                row[f"price_{k}"] = float(s)
            rows.append(row)
        return pd.DataFrame(rows)

    def to_csv(self, path: Union[str, Path]) -> Path:
        """Write :meth:`to_frame` as CSV with full float precision."""
        path = Path(path)
        self.to_frame().to_csv(path, index=False, float_format="%.17g")
        return path


@dataclass(frozen=True, eq=False)
class Claim:
    """Bounded payoff, one value per atom."""

    payoff: np.ndarray

    def __post_init__(self) -> None:
        payoff = np.atleast_1d(np.asarray(self.payoff, dtype=float))
        if payoff.ndim != 1 or not np.all(np.isfinite(payoff)):
            raise ValidationError(
                "Claim payoff must be a finite vector", error_code=ErrorCode.INVALID_CLAIM
            )
        object.__setattr__(self, "payoff", payoff)

    @classmethod
    def zero(cls, tree: MarketTree) -> "Claim":
        return cls(np.zeros(tree.n_atoms))

    @classmethod
    def constant(cls, tree: MarketTree, value: float) -> "Claim":
        return cls(np.full(tree.n_atoms, float(value)))

    @classmethod
    def for_tree(cls, tree: MarketTree, payoff: Sequence[float]) -> "Claim":
        """Claim checked against the atom count of ``tree``."""
        claim = cls(np.asarray(payoff, dtype=float))
        if claim.payoff.size != tree.n_atoms:
            raise ValidationError(
                f"Claim has {claim.payoff.size} values but the tree has {tree.n_atoms} atoms",
                error_code=ErrorCode.INVALID_CLAIM,
                field="claim",
            )
        return claim

    @property
    def norm(self) -> float:
        """``∥B∥_∞``."""
        return float(np.max(np.abs(self.payoff))) if self.payoff.size else 0.0

    def __add__(self, other: Union["Claim", float]) -> "Claim":
        if isinstance(other, Claim):
            return Claim(self.payoff + other.payoff)
        return Claim(self.payoff + float(other))

    def __neg__(self) -> "Claim":
        return Claim(-self.payoff)

    def scaled(self, factor: float) -> "Claim":
        return Claim(factor * self.payoff)


@dataclass(frozen=True, eq=False)
class Strategy:
    """Holdings ``θ`` per non-terminal node (rows) and asset (columns)."""

    holdings: np.ndarray

    @classmethod
    def zeros(cls, tree: MarketTree) -> "Strategy":
        return cls(np.zeros((tree.nonterminal.size, tree.n_assets)))

    @classmethod
    def from_flat(cls, tree: MarketTree, vector: np.ndarray) -> "Strategy":
        return cls(np.asarray(vector, dtype=float).reshape(tree.nonterminal.size, tree.n_assets))

    @property
    def flat(self) -> np.ndarray:
        return np.asarray(self.holdings, dtype=float).ravel()

    def __add__(self, other: "Strategy") -> "Strategy":
        return Strategy(self.holdings + other.holdings)

    def at(self, tree: MarketTree, node: int) -> np.ndarray:
        """Holdings chosen at ``node``."""
        return self.holdings[tree.column(node)]


@dataclass(frozen=True, eq=False)
class MartingaleDensity:
    """Terminal density ``Z = dQ/dP`` of an absolutely continuous martingale measure."""

    weights: np.ndarray

    @classmethod
    def checked(cls, tree: MarketTree, weights: np.ndarray, tol: float = 1e-9) -> "MartingaleDensity":
        """Density validated for sign, mass and the martingale rows."""
        z = np.asarray(weights, dtype=float)
        residual = membership_residual(tree, z)
        if residual > tol:
            raise ValidationError(
                "Weights are not a martingale density",
                error_code=ErrorCode.VALIDATION_FAILED,
                details={"residual": residual},
            )
        return cls(z)

    @property
    def equivalent(self) -> bool:
        """``Z > 0`` on every atom (a member of M^e)."""
        return bool(np.all(self.weights > 0))

    def measure(self, tree: MarketTree) -> np.ndarray:
        """Atom probabilities under Q."""
        return tree.p * self.weights

    def expectation(self, tree: MarketTree, values: np.ndarray) -> float:
        return float(self.measure(tree) @ np.asarray(values, dtype=float))


def membership_residual(tree: MarketTree, z: np.ndarray) -> float:
    """Largest violation of ``Z >= 0``, ``E[Z] = 1`` and the martingale rows."""
    z = np.asarray(z, dtype=float)
    parts = [abs(float(tree.p @ z) - 1.0), float(np.max(np.maximum(-z, 0.0)))]
    rows = tree.martingale_rows()
    if rows.size:
        parts.append(float(np.max(np.abs(rows @ z))))
    return max(parts)


def terminal_wealth(tree: MarketTree, x: float, theta: Strategy) -> np.ndarray:
    """``X_T = x + Σ θ_t·(S_{t+1} - S_t)`` on every atom."""
    return x + tree.increments @ theta.flat


def wealth_process(tree: MarketTree, x: float, theta: Strategy) -> np.ndarray:
    """Wealth at every node, ``x`` at the root."""
    wealth = np.empty(len(tree.nodes))
    for i, node in enumerate(tree.nodes):
        if node.parent is None:
            wealth[i] = x
        else:
            parent = tree.nodes[node.parent]
            wealth[i] = wealth[node.parent] + theta.at(tree, node.parent) @ (node.prices - parent.prices)
    return wealth


def node_masses(tree: MarketTree, z: np.ndarray) -> np.ndarray:
    """``Q(ν)`` for every node under the measure ``Z·P``."""
    mass = np.zeros(len(tree.nodes))
    mass[tree.atoms] = tree.p * np.asarray(z, dtype=float)
    for i in range(len(tree.nodes) - 1, 0, -1):
        mass[tree.nodes[i].parent] += mass[i]
    return mass


def conditional_expectation(tree: MarketTree, z: np.ndarray, values: np.ndarray) -> np.ndarray:
    """``E_Q[X | ν]`` at every node; ``nan`` at nodes Q does not reach.

    ``values`` may be one value per atom or a matrix with one row per atom.
    """
    values = np.asarray(values, dtype=float)
    mass = node_masses(tree, z)
    weighted = np.zeros((len(tree.nodes),) + values.shape[1:])
    weighted[tree.atoms] = (tree.p * np.asarray(z, dtype=float)).reshape((-1,) + (1,) * (values.ndim - 1)) * values
    for i in range(len(tree.nodes) - 1, 0, -1):
        weighted[tree.nodes[i].parent] += weighted[i]
    shape = (-1,) + (1,) * (values.ndim - 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = weighted / mass.reshape(shape)
    out[mass <= 0] = np.nan
    return out


def _one_step_gaps(tree: MarketTree, z: np.ndarray, node_values: np.ndarray) -> np.ndarray:
    """``E_Q[M_{t+1} | ν] - M_ν`` per non-terminal node; ``nan`` where Q(ν) = 0."""
    node_values = np.asarray(node_values, dtype=float)
    mass = node_masses(tree, z)
    gaps = np.full((tree.nonterminal.size,) + node_values.shape[1:], np.nan)
    for k, v in enumerate(tree.nonterminal):
        if mass[v] <= 0:
            continue
        children = tree.nodes[v].children
        q = mass[list(children)] / mass[v]
        gaps[k] = np.tensordot(q, node_values[list(children)], axes=1) - node_values[v]
    return gaps


def martingale_residuals(tree: MarketTree, z: np.ndarray, node_values: np.ndarray) -> np.ndarray:
    """``|E_Q[M_{t+1} | ν] - M_ν|`` per non-terminal node reached by Q."""
    gaps = _one_step_gaps(tree, z, node_values)
    if gaps.ndim > 1:
        gaps = np.max(np.abs(gaps), axis=tuple(range(1, gaps.ndim)))
    return np.abs(gaps)


def supermartingale_residuals(tree: MarketTree, z: np.ndarray, node_values: np.ndarray) -> np.ndarray:
    """``max(0, E_Q[M_{t+1} | ν] - M_ν)`` per non-terminal node reached by Q."""
    return np.maximum(_one_step_gaps(tree, z, node_values), 0.0)


def price_matrix(tree: MarketTree) -> np.ndarray:
    """Prices at every node, one row per node."""
    return np.vstack([n.prices for n in tree.nodes])
