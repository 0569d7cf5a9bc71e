"""Scenario execution and deterministic report emission."""

import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from ..applications.indifference import IndifferenceResult, indifference_price
from ..applications.shortfall import ShortfallResult, shortfall_risk
from ..config import TOLERANCE_FIELDS, NsDualSettings, get_settings
from ..exceptions import ErrorCategory, ErrorCode, NsDualError, VerificationError
from ..logging import get_logger
from ..market.polytope import MartingalePolytope, martingale_polytope
from ..market.tree import MarketTree
from ..solvers.ladder import truncation_ladder
from ..solvers.measures import dual_value_curve
from ..solvers.models import LadderTrace, SolveReport
from ..solvers.orchestrate import solve_duality
from .scenario import Scenario, Task, load_scenario
from .tables import ATOM_COLUMNS, atoms_frame, emit_plot_data, write_csv

logger = get_logger("cli.runner")

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_SOLVER = 4

_EXIT_BY_CATEGORY = {
    ErrorCategory.INPUT: EXIT_PARSE,
    ErrorCategory.VALIDATION: EXIT_VALIDATION,
    ErrorCategory.MARKET: EXIT_VALIDATION,
    ErrorCategory.SOLVER: EXIT_SOLVER,
    ErrorCategory.VERIFICATION: EXIT_VERIFICATION,
}

# Dual value curve sampled at y* times these factors.
CURVE_FACTORS = tuple(float(f) for f in np.linspace(0.5, 2.0, 16))


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, NsDualError) and error.category is not None:
        return _EXIT_BY_CATEGORY.get(error.category, EXIT_SOLVER)
    return EXIT_SOLVER


def reason_for(error: BaseException) -> Dict[str, Any]:
    if isinstance(error, NsDualError):
        return error.to_dict()
    return {"type": type(error).__name__, "message": str(error), "error_code": None}


class RunRecord(BaseModel):
    """Results for one initial capital."""

    x: float
    passed: bool
    duality: Optional[SolveReport] = None
    shortfall: Optional[Dict[str, Any]] = None
    indifference: Optional[IndifferenceResult] = None
    ladder: Optional[LadderTrace] = None
    dual_curve: Optional[Dict[str, List[float]]] = None


class ScenarioReport(BaseModel):
    """Everything written to ``report.json``."""

    schema_version: int = 1
    name: str
    task: str
    seed: int
    tolerances: Dict[str, float]
    atoms: List[str]
    probabilities: List[float]
    n_assets: int
    horizon: int
    runs: List[RunRecord]
    passed: bool
    failures: List[str] = []


@dataclass
class RunOutcome:
    """Exit code and files of one scenario run."""

    name: str
    exit_code: int
    reason: Optional[Dict[str, Any]] = None
    out_dir: Optional[Path] = None
    paths: Dict[str, Path] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.exit_code == EXIT_OK


def _finite(value: Any) -> Any:
    """Replace non-finite floats by strings so reports stay valid JSON."""
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    return value


def dumps_report(payload: Any) -> str:
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    return json.dumps(_finite(payload), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_atomic(path: Path, text: str) -> Path:
    """Write through a temporary file in the same directory and rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


class ScenarioRunner:
    """Runs one validated scenario against a settings object."""

    def __init__(self, scenario: Scenario, settings: NsDualSettings, seed: int):
        self.scenario = scenario
        self.settings = settings
        self.seed = seed
        self.logger = get_logger("cli.runner").bind(scenario=scenario.name, task=scenario.task.value)
        self.tree: MarketTree = scenario.market.build()
        self.claim = scenario.build_claim(self.tree)
        self.utility = scenario.utility.build() if scenario.utility is not None else None
        self.loss = scenario.loss.build() if scenario.loss is not None else None
        self._polytope: Optional[MartingalePolytope] = None

    @property
    def polytope(self) -> MartingalePolytope:
        if self._polytope is None:
            self._polytope = martingale_polytope(self.tree, self.settings)
        return self._polytope

    def _duality(self, x: float, audit: bool = False) -> SolveReport:
        return solve_duality(
            self.tree,
            self.utility,
            self.claim,
            x,
            polytope=self.polytope,
            settings=self.settings,
            uniqueness=audit,
            audit=audit,
            seed=self.seed,
        )

    def _curve(self, report: SolveReport) -> Optional[Dict[str, List[float]]]:
        if self.utility is None or not report.dual.y > 0:
            return None
        ys = [report.dual.y * f for f in CURVE_FACTORS]
        values = dual_value_curve(
            self.tree, self.utility.conjugate(), self.claim, ys, self.polytope, self.settings
        )
        return {"y": ys, "value": [float(v) for v in values]}

    def run_one(self, x: float) -> RunRecord:
        task = self.scenario.task
        self.logger.info("Running capital", x=x)
        if task == Task.SHORTFALL:
            result: ShortfallResult = shortfall_risk(
                self.tree, self.loss, self.claim, x, polytope=self.polytope, settings=self.settings
            )
            return RunRecord(
                x=x,
                passed=result.report.passed,
                duality=result.report,
                shortfall=result.model_dump(mode="json", exclude={"report"}),
                dual_curve=self._curve(result.report),
            )
        if task == Task.INDIFFERENCE:
            price = indifference_price(self.tree, self.utility, self.claim, x, self.polytope, self.settings)
            report = self._duality(x)
            return RunRecord(x=x, passed=price.converged and report.passed, duality=report, indifference=price)
        if task == Task.LADDER:
            report = self._duality(x)
            trace = truncation_ladder(
                self.tree, self.utility, self.claim, x, self.scenario.ladder_levels, self.polytope, self.settings
            )
            return RunRecord(
                x=x,
                passed=report.passed and trace.monotone,
                duality=report,
                ladder=trace,
                dual_curve=self._curve(report),
            )
        audit = task == Task.AUDIT
        report = self._duality(x, audit=audit)
        passed = report.passed
        if audit and report.audit is not None and not report.audit.skipped:
            passed = passed and report.audit.passed
        return RunRecord(x=x, passed=passed, duality=report, dual_curve=self._curve(report))

    def run(self) -> ScenarioReport:
        runs = [self.run_one(x) for x in self.scenario.capitals]
        failures = [f"x={r.x:g}" for r in runs if not r.passed]
        return ScenarioReport(
            name=self.scenario.name,
            task=self.scenario.task.value,
            seed=self.seed,
            tolerances={name: float(getattr(self.settings, name)) for name in TOLERANCE_FIELDS},
            atoms=self.tree.atom_ids(),
            probabilities=[float(p) for p in self.tree.p],
            n_assets=self.tree.n_assets,
            horizon=self.tree.horizon,
            runs=runs,
            passed=not failures,
            failures=failures,
        )

    def write(self, report: ScenarioReport, out_dir: Path) -> Dict[str, Path]:
        paths = {"report": write_atomic(out_dir / "report.json", dumps_report(report))}

        frames = [
            atoms_frame(r.duality, self.tree.p, self.utility or (self.loss.utility() if self.loss else None))
            for r in report.runs
            if r.duality is not None
        ]
        atoms = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=ATOM_COLUMNS)
        paths["atoms"] = write_csv(atoms, out_dir / "atoms.csv")

        first = report.runs[0] if report.runs else None
        ladders = []
        if first is not None and first.duality is not None:
            ladders = [first.duality.smoothing_trace, first.ladder]
        paths.update(
            emit_plot_data(
                out_dir,
                first.duality if first is not None else None,
                ladders=ladders,
                curve=first.dual_curve if first is not None else None,
            )
        )
        return paths


def _status(name: str, exit_code: int, reason: Optional[Dict[str, Any]]) -> str:
    return dumps_report({"name": name, "exit_code": exit_code, "passed": exit_code == EXIT_OK, "reason": reason})


def run_scenario(
    path: Union[str, Path],
    out_dir: Optional[Union[str, Path]] = None,
    tol_overrides: Optional[Mapping[str, float]] = None,
    seed: Optional[int] = None,
    task: Optional[str] = None,
    settings: Optional[NsDualSettings] = None,
) -> RunOutcome:
    """Load, validate and run one scenario file.

    The report lands in ``out_dir/<scenario name>``. Errors never escape: they are
    mapped onto the exit-code contract and recorded in ``status.json``.
    """
    settings = settings or get_settings()
    path = Path(path)
    base = Path(out_dir) if out_dir is not None else Path(settings.output_dir)
    name = path.stem
    target = base / name
    paths: Dict[str, Path] = {}
    try:
        scenario = load_scenario(path).with_task(task)
        name = scenario.name
        target = base / name
        effective = settings.with_overrides({**scenario.tolerances, **(tol_overrides or {})})
        runner = ScenarioRunner(scenario, effective, scenario.seed if seed is None else seed)
        report = runner.run()
        paths = runner.write(report, target)
        if not report.passed:
            raise VerificationError(
                "Verifier thresholds failed",
                error_code=ErrorCode.VERIFICATION_FAILED,
                details={"failures": report.failures},
            )
        outcome = RunOutcome(name=name, exit_code=EXIT_OK, out_dir=target, paths=paths)
    except Exception as e:
        code = exit_code_for(e)
        if code == EXIT_SOLVER and not isinstance(e, NsDualError):
            logger.error("Unexpected failure while running scenario", scenario=name, exc_info=True)
        else:
            logger.warning("Scenario failed", scenario=name, exit_code=code, reason=str(e))
        outcome = RunOutcome(name=name, exit_code=code, reason=reason_for(e), out_dir=target, paths=dict(paths))

    outcome.paths["status"] = write_atomic(target / "status.json", _status(name, outcome.exit_code, outcome.reason))
    logger.info("Scenario finished", scenario=name, exit_code=outcome.exit_code)
    return outcome


def batch(
    directory: Union[str, Path],
    out_dir: Optional[Union[str, Path]] = None,
    tol_overrides: Optional[Mapping[str, float]] = None,
    seed: Optional[int] = None,
    task: Optional[str] = None,
    settings: Optional[NsDualSettings] = None,
    workers: Optional[int] = None,
) -> List[RunOutcome]:
    """Run every ``*.json`` scenario in ``directory``, one worker per scenario.

    Outcomes come back in file-name order regardless of completion order.
    """
    files = sorted(Path(directory).glob("*.json"))
    if not files:
        return []
    with ThreadPoolExecutor(max_workers=workers or min(len(files), os.cpu_count() or 1)) as pool:
        futures = [pool.submit(run_scenario, f, out_dir, tol_overrides, seed, task, settings) for f in files]
        return [future.result() for future in futures]


def batch_exit_code(outcomes: List[RunOutcome]) -> int:
    return max((o.exit_code for o in outcomes), default=EXIT_OK)
