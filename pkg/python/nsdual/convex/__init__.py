"""Utilities, Fenchel conjugates, elasticity estimates and admissibility."""

from .admissibility import AdmissibilityReport, Route, validate_admissibility
from .conjugate import (
    ConjugateFunction,
    ExponentialConjugate,
    NumericConjugate,
    PiecewiseAffineConjugate,
    PowerShortfallConjugate,
    ShiftedConjugate,
    TruncatedConjugate,
)
from .elasticity import ElasticityEnd, ElasticityEstimate, estimate_asymptotic_elasticity
from .transforms import conjugate, normalize, shift, subdiff_conjugate, truncate
from .utility import (
    Exponential,
    PiecewiseLinearConcave,
    PowerShortfall,
    QuadraticShortfall,
    Shifted,
    Truncated,
    Utility,
)

__all__ = [
    "AdmissibilityReport",
    "ConjugateFunction",
    "ElasticityEnd",
    "ElasticityEstimate",
    "Exponential",
    "ExponentialConjugate",
    "NumericConjugate",
    "PiecewiseAffineConjugate",
    "PiecewiseLinearConcave",
    "PowerShortfall",
    "PowerShortfallConjugate",
    "QuadraticShortfall",
    "Route",
    "Shifted",
    "ShiftedConjugate",
    "Truncated",
    "TruncatedConjugate",
    "Utility",
    "conjugate",
    "estimate_asymptotic_elasticity",
    "normalize",
    "shift",
    "subdiff_conjugate",
    "truncate",
    "validate_admissibility",
]
