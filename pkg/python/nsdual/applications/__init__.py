"""Shortfall-risk minimisation and utility-indifference pricing."""

from .indifference import IndifferenceResult, indifference_price
from .loss import LossFunction, PiecewiseLinearLoss, PowerLoss
from .shortfall import ShortfallResult, shortfall_risk

__all__ = [
    "IndifferenceResult",
    "LossFunction",
    "PiecewiseLinearLoss",
    "PowerLoss",
    "ShortfallResult",
    "indifference_price",
    "shortfall_risk",
]
