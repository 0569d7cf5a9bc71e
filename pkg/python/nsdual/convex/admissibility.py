"""Admissibility of a utility for the duality results.

A utility qualifies when its slopes go down to zero, its largest slope ``r``
is not attained, and its conjugate has finite asymptotic elasticity at both
ends. Utilities on all of ℝ take the unbounded-domain route, truncated ones
the bounded-below route.
"""

import math
from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..config import NsDualSettings, get_settings
from ..exceptions import ShiftRequiredError
from ..logging import get_logger
from .elasticity import ElasticityEnd, ElasticityEstimate, estimate_asymptotic_elasticity
from .transforms import normalize
from .utility import Utility

logger = get_logger("convex.admissibility")


class Route(str, Enum):
    """Which existence result a utility qualifies for."""

    UNBOUNDED = "unbounded"
    BOUNDED_BELOW = "bounded_below"


class AdmissibilityReport(BaseModel):
    """Pass/fail per condition plus the route the utility qualifies for."""

    model_config = ConfigDict(frozen=True)

    family: str
    r: float
    r_attained: bool
    inf_superdiff_zero: bool
    u_at_zero: float
    normalization_shift: float
    satiation: float
    domain_left: float
    shape_ok: bool
    ae_zero: Optional[ElasticityEstimate] = None
    ae_infinity: Optional[ElasticityEstimate] = None
    ae_finite: bool
    r_infinite_certified: bool
    route: Optional[Route] = None
    reasons: List[str] = []

    @property
    def passed(self) -> bool:
        return self.route is not None


def _shape_check(utility: Utility, tol: float) -> bool:
    """Monotone, concave and with monotone superdifferential on a sample grid."""
    left = max(utility.domain_left, -10.0)
    xs = np.linspace(left, 10.0, 41)
    values = np.asarray(utility.value(xs), dtype=float)
    if not np.all(np.isfinite(values)):
        return False
    scale = 1.0 + np.abs(values)
    nondecreasing = np.all(np.diff(values) >= -tol * scale[1:])
    midpoints = np.asarray(utility.value(0.5 * (xs[:-2] + xs[2:])), dtype=float)
    concave = np.all(midpoints >= 0.5 * (values[:-2] + values[2:]) - tol * scale[1:-1])
    lo, hi = utility.superdiff_bounds(xs)
    finite = np.isfinite(hi[1:])
    monotone = np.all(lo[:-1][finite] >= hi[1:][finite] - tol * (1.0 + np.abs(hi[1:][finite])))
    return bool(nondecreasing and concave and monotone)


def validate_admissibility(
    utility: Utility, settings: Optional[NsDualSettings] = None
) -> AdmissibilityReport:
    """Check the conditions the duality results need.

    The elasticity is measured on the normalised utility (``U(0) > 0``), whose
    conjugate is positive everywhere.

    Args:
        utility: Utility to check
        settings: Tolerances and elasticity grid depth

    Returns:
        Report with one flag per condition; ``route`` is ``None`` when rejected
    """
    settings = settings or get_settings()
    tol = settings.tol_conj_numeric
    reasons: List[str] = []

    far = 2.0 ** settings.r_detection_cap_exponent
    inf_slope = float(utility.superdiff_bounds(far)[0][0])
    inf_superdiff_zero = inf_slope <= tol
    if not inf_superdiff_zero:
        reasons.append(f"inf of supergradients is {inf_slope}, not 0")

    r = utility.r
    r_attained = utility.r_attained
    if r_attained:
        reasons.append(f"r = {r} is attained as a supergradient")

    shape_ok = _shape_check(utility, settings.tol_conj_closed * 1e3)
    if not shape_ok:
        reasons.append("utility failed the monotone/concave sample checks")

    normalized, k2 = normalize(utility)
    conj = normalized.conjugate()
    estimates = {}
    for end in (ElasticityEnd.ZERO, ElasticityEnd.INFINITY):
        try:
            estimates[end] = estimate_asymptotic_elasticity(conj, end, settings)
        except ShiftRequiredError as e:
            reasons.append(f"elasticity at {end.value}: {e.message}")
            estimates[end] = None

    ae_finite = all(est is not None and est.finite for est in estimates.values())
    for end, est in estimates.items():
        if est is not None and not est.finite:
            reasons.append(f"asymptotic elasticity at {end.value} diverges ({est.reason})")

    r_infinite_certified = ae_finite and math.isinf(r)

    route: Optional[Route] = None
    if inf_superdiff_zero and not r_attained and shape_ok and r_infinite_certified:
        route = Route.UNBOUNDED if math.isinf(utility.domain_left) else Route.BOUNDED_BELOW

    report = AdmissibilityReport(
        family=utility.family,
        r=r,
        r_attained=r_attained,
        inf_superdiff_zero=inf_superdiff_zero,
        u_at_zero=float(utility.value(0.0)),
        normalization_shift=k2,
        satiation=utility.satiation,
        domain_left=utility.domain_left,
        shape_ok=shape_ok,
        ae_zero=estimates[ElasticityEnd.ZERO],
        ae_infinity=estimates[ElasticityEnd.INFINITY],
        ae_finite=ae_finite,
        r_infinite_certified=r_infinite_certified,
        route=route,
        reasons=reasons,
    )
    logger.info(
        "Validated utility admissibility",
        family=utility.family,
        route=route.value if route else None,
        reasons=len(reasons),
    )
    return report
