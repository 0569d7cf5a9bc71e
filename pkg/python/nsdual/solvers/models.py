"""Solver results and report models.

Solvers hand back frozen dataclasses over numpy arrays; the serialisable
reports are pydantic models holding plain lists so that
``model_dump(mode="json")`` is deterministic.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..convex.admissibility import AdmissibilityReport
from ..market.tree import Strategy


class LadderKind(str, Enum):
    SMOOTHING = "smoothing"
    TRUNCATION = "truncation"


class LadderPoint(BaseModel):
    """One level of an approximation ladder."""

    n: float
    primal: Optional[float] = None
    dual: float


class LadderTrace(BaseModel):
    """Values along a ladder with its monotonicity verdict."""

    kind: LadderKind
    points: List[LadderPoint] = []
    monotone: bool = True
    max_violation: float = 0.0
    reference: Optional[float] = None
    final_gap: Optional[float] = None

    def duals(self) -> List[float]:
        return [p.dual for p in self.points]

    def settle(self, upper: Optional[float] = None) -> None:
        """Exact monotonicity of the dual values, closed by ``upper`` when given.

        ``max_violation`` is the largest decrease along the chain; any positive
        value makes the ladder non-monotone.
        """
        chain = self.duals() + ([upper] if upper is not None else [])
        drops = [a - b for a, b in zip(chain, chain[1:])]
        self.max_violation = max([0.0] + drops)
        self.monotone = self.max_violation <= 0.0


@dataclass(frozen=True, eq=False)
class DualSolution:
    """Minimiser ``(y*, Y*)`` of the dual problem and its unsmoothed value."""

    value: float
    y: float
    Y: np.ndarray
    trace: Optional[LadderTrace] = None
    method: str = "smoothing"
    iterations: int = 0

    @property
    def density(self) -> Optional[np.ndarray]:
        """``Z* = Y*/y*`` or ``None`` when ``y* = 0``."""
        if self.y <= 0:
            return None
        return self.Y / self.y


@dataclass(frozen=True, eq=False)
class PrimalSolution:
    """Maximiser of the primal problem."""

    value: float
    wealth: np.ndarray
    strategy: Optional[Strategy] = None
    satiated: bool = False
    method: str = "ascent"
    iterations: int = 0
    floor_ok: Optional[bool] = None
    extras: Dict[str, float] = field(default_factory=dict)


class DualPoint(BaseModel):
    """``(y, Y)`` with ``E[Y] = y``."""

    y: float
    Y: List[float]
    membership_residual: float = 0.0


class DualityDiagnostics(BaseModel):
    """Residuals of the optimality system and the verdict against thresholds."""

    gap: float
    gap_rel: float
    inclusion_residuals: List[float]
    inclusion_max: float
    kkt_max: float
    oracle_gap: Optional[float] = None
    budget_residual: float
    min_dual_weight: float
    satiated: bool
    replication_residual: Optional[float] = None
    wealth_martingale_residual: Optional[float] = None
    price_martingale_residual: Optional[float] = None
    positivity_checked: bool = False
    positivity_ok: Optional[bool] = None
    floor_ok: Optional[bool] = None
    attainable_in_x_plus: Optional[bool] = None
    passed: bool
    failures: List[str] = []


class UniquenessReport(BaseModel):
    """Spread of primal optimisers and the shape of the dual optimal face."""

    primal_spread: float
    primal_unique: bool
    primal_face_widths: Optional[List[float]] = None
    dual_face_dimension: int = 0
    dual_face_center: Optional[List[float]] = None
    flat_atoms: List[int] = []
    dual_unique: bool = True


class AuditReport(BaseModel):
    """Martingale and supermartingale checks plus the dual-value growth certificate."""

    skipped: bool = False
    reason: Optional[str] = None
    martingale_residual: Optional[float] = None
    supermartingale_residuals: List[float] = []
    vertices_checked: int = 0
    growth_constant: Optional[float] = None
    value_offset: float = 0.0
    growth_ok: Optional[bool] = None
    capital_in_superdiff: Optional[bool] = None
    left_derivative: Optional[float] = None
    right_derivative: Optional[float] = None
    passed: bool = False


class SolveReport(BaseModel):
    """Everything one duality solve produced."""

    model_config = ConfigDict(frozen=True)

    route: str
    family: str
    x: float
    V: float
    W: float
    gap: float
    atoms: List[str]
    B: List[float]
    X: List[float]
    theta: Optional[List[List[float]]] = None
    dual: DualPoint
    Q: Optional[List[float]] = None
    normalization_shift: float = 0.0
    beta: Optional[float] = None
    satiated: bool = False
    measures_value: Optional[float] = None
    smoothing_trace: Optional[LadderTrace] = None
    truncation_trace: Optional[LadderTrace] = None
    flags: Dict[str, bool] = Field(default_factory=dict)
    admissibility: Optional[AdmissibilityReport] = None
    diagnostics: Optional[DualityDiagnostics] = None
    uniqueness: Optional[UniquenessReport] = None
    audit: Optional[AuditReport] = None

    @property
    def passed(self) -> bool:
        return self.diagnostics is not None and self.diagnostics.passed
