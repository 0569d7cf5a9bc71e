"""Independent primal and dual solvers, approximation ladders and verifiers."""

from .audit import admissible_class_audit
from .dual import dual_objective, solve_dual
from .ladder import truncation_ladder
from .measures import DualValueFunction, dual_over_measures, dual_value_curve
from .models import (
    AuditReport,
    DualityDiagnostics,
    DualPoint,
    DualSolution,
    LadderKind,
    LadderPoint,
    LadderTrace,
    PrimalSolution,
    SolveReport,
    UniquenessReport,
)
from .orchestrate import require_admissible, route_beta, solve_duality
from .primal import expected_utility, solve_primal_dynamic, solve_primal_static
from .uniqueness import uniqueness_probe
from .verify import (
    dual_finite,
    inclusion_residuals,
    kkt_residuals,
    select_primal_from_dual,
    verify_duality,
)

__all__ = [
    "AuditReport",
    "DualPoint",
    "DualSolution",
    "DualValueFunction",
    "DualityDiagnostics",
    "LadderKind",
    "LadderPoint",
    "LadderTrace",
    "PrimalSolution",
    "SolveReport",
    "UniquenessReport",
    "admissible_class_audit",
    "dual_finite",
    "dual_objective",
    "dual_over_measures",
    "dual_value_curve",
    "expected_utility",
    "inclusion_residuals",
    "kkt_residuals",
    "require_admissible",
    "route_beta",
    "select_primal_from_dual",
    "solve_dual",
    "solve_duality",
    "solve_primal_dynamic",
    "solve_primal_static",
    "truncation_ladder",
    "uniqueness_probe",
    "verify_duality",
]
