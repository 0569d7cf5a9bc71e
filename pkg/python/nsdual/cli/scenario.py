"""Scenario files: versioned JSON describing one market, utility, claim and task."""

import json
from enum import Enum
from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic import ValidationError as PydanticValidationError

from ..applications.loss import LossFunction, PiecewiseLinearLoss, PowerLoss
from ..convex.utility import (
    Exponential,
    PiecewiseLinearConcave,
    PowerShortfall,
    QuadraticShortfall,
    Shifted,
    Truncated,
    Utility,
)
from ..exceptions import ErrorCode, ScenarioParseError, ValidationError
from ..market.generators import binomial_lattice, one_period
from ..market.tree import Claim, MarketTree

SCHEMA_VERSION = 1


class Task(str, Enum):
    DUALITY = "duality"
    SHORTFALL = "shortfall"
    INDIFFERENCE = "indifference"
    LADDER = "ladder"
    AUDIT = "audit"


class _Spec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# Utilities


class ExponentialSpec(_Spec):
    family: Literal["exponential"]
    eta: float = Field(1.0, gt=0)

    def build(self) -> Utility:
        return Exponential(self.eta)


class QuadraticShortfallSpec(_Spec):
    family: Literal["quadratic_shortfall"]

    def build(self) -> Utility:
        return QuadraticShortfall()


class PowerShortfallSpec(_Spec):
    family: Literal["power_shortfall"]
    p: float = Field(..., gt=1)
    scale: float = Field(1.0, gt=0)

    def build(self) -> Utility:
        return PowerShortfall(self.p, self.scale)


class PiecewiseLinearSpec(_Spec):
    family: Literal["piecewise_linear"]
    breakpoints: List[Tuple[float, float]] = Field(..., min_length=1)
    tail_slope: float = Field(0.0, ge=0)
    level: float = 0.0

    def build(self) -> Utility:
        return PiecewiseLinearConcave(self.breakpoints, self.tail_slope, self.level)


class ShiftedSpec(_Spec):
    family: Literal["shifted"]
    base: "UtilitySpec"
    k1: float = 0.0
    k2: float = 0.0

    def build(self) -> Utility:
        return Shifted(self.base.build(), self.k1, self.k2)


class TruncatedSpec(_Spec):
    family: Literal["truncated"]
    base: "UtilitySpec"
    n: float = Field(..., gt=0)

    def build(self) -> Utility:
        return Truncated(self.base.build(), self.n)


UtilitySpec = Annotated[
    Union[
        ExponentialSpec,
        QuadraticShortfallSpec,
        PowerShortfallSpec,
        PiecewiseLinearSpec,
        ShiftedSpec,
        TruncatedSpec,
    ],
    Field(discriminator="family"),
]

ShiftedSpec.model_rebuild()
TruncatedSpec.model_rebuild()


# Losses


class PowerLossSpec(_Spec):
    family: Literal["power"]
    p: float = Field(2.0, ge=1)
    scale: float = Field(1.0, gt=0)

    def build(self) -> LossFunction:
        return PowerLoss(self.p, self.scale)


class PiecewiseLinearLossSpec(_Spec):
    family: Literal["piecewise_linear"]
    kinks: List[Tuple[float, float]] = Field(..., min_length=1)
    level: float = 0.0

    def build(self) -> LossFunction:
        return PiecewiseLinearLoss(self.kinks, self.level)


LossSpec = Annotated[Union[PowerLossSpec, PiecewiseLinearLossSpec], Field(discriminator="family")]


# Markets


class NodeSpec(_Spec):
    id: str
    parent: Optional[str] = None
    probability: float = 1.0
    prices: List[float] = Field(..., min_length=1)


class ExplicitMarketSpec(_Spec):
    kind: Literal["explicit"]
    nodes: List[NodeSpec] = Field(..., min_length=1)

    def build(self) -> MarketTree:
        return MarketTree.from_nodes([n.model_dump() for n in self.nodes])


class OnePeriodMarketSpec(_Spec):
    kind: Literal["one_period"]
    s0: Union[float, List[float]]
    outcomes: List[Union[float, List[float]]] = Field(..., min_length=1)
    probabilities: Optional[List[float]] = None

    def build(self) -> MarketTree:
        return one_period(self.s0, self.outcomes, self.probabilities)


class BinomialMarketSpec(_Spec):
    kind: Literal["binomial"]
    s0: float = Field(..., gt=0)
    up: float = Field(..., gt=0)
    down: float = Field(..., gt=0)
    periods: int = Field(1, ge=1)
    p_up: float = Field(0.5, gt=0, lt=1)

    def build(self) -> MarketTree:
        return binomial_lattice(self.s0, self.up, self.down, self.periods, self.p_up)


MarketSpec = Annotated[
    Union[ExplicitMarketSpec, OnePeriodMarketSpec, BinomialMarketSpec], Field(discriminator="kind")
]


class Scenario(_Spec):
    """One scenario file."""

    schema_version: Literal[1] = SCHEMA_VERSION
    name: str = Field(..., min_length=1, pattern=r"^[A-Za-z0-9_.-]+$")
    description: str = ""
    market: MarketSpec
    utility: Optional[UtilitySpec] = None
    loss: Optional[LossSpec] = None
    claim: Optional[List[float]] = None
    capital: Union[float, List[float]]
    task: Task = Task.DUALITY
    tolerances: Dict[str, float] = Field(default_factory=dict)
    seed: int = Field(0, ge=0)
    ladder_levels: List[float] = Field(default_factory=lambda: [2.0, 4.0, 8.0, 16.0, 32.0])

    @field_validator("tolerances")
    @classmethod
    def validate_tolerances(cls, v: Dict[str, float]) -> Dict[str, float]:
        bad = [k for k, val in v.items() if not val > 0]
        if bad:
            raise ValueError(f"tolerances must be positive: {bad}")
        return v

    @model_validator(mode="after")
    def validate_task_inputs(self) -> "Scenario":
        if self.task == Task.SHORTFALL and self.loss is None:
            raise ValueError("the shortfall task needs a loss")
        if self.task != Task.SHORTFALL and self.utility is None:
            raise ValueError(f"the {self.task.value} task needs a utility")
        return self

    @property
    def capitals(self) -> List[float]:
        return [float(self.capital)] if isinstance(self.capital, (int, float)) else [float(c) for c in self.capital]

    def build_claim(self, tree: MarketTree) -> Claim:
        if self.claim is None:
            return Claim.zero(tree)
        return Claim.for_tree(tree, self.claim)

    def with_task(self, task: Optional[Union[str, Task]]) -> "Scenario":
        if task is None:
            return self
        return Scenario.model_validate({**self.model_dump(), "task": Task(task)})


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Read and validate a scenario file.

    Raises:
        ScenarioParseError: If the file is missing or is not JSON
        ValidationError: If the content does not match the schema
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as e:
        raise ScenarioParseError(
            f"Scenario file not found: {path}", error_code=ErrorCode.MISSING_FILE, field="scenario"
        ) from e
    except OSError as e:
        raise ScenarioParseError(f"Cannot read scenario file {path}: {e}", field="scenario") from e
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(
            f"Scenario file is not valid JSON: {e.msg}",
            details={"line": e.lineno, "column": e.colno},
        ) from e
    return parse_scenario(raw)


def parse_scenario(raw: object) -> Scenario:
    """Validate an already decoded scenario document."""
    try:
        return Scenario.model_validate(raw)
    except PydanticValidationError as e:
        raise ValidationError(
            "Scenario does not match the schema",
            error_code=ErrorCode.INVALID_SCENARIO,
            details={"errors": [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()]},
        ) from e
