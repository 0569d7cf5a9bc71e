"""Quadratic inf-convolution smoothing of conjugates."""

from .infconv import (
    GrowthCheck,
    InfConvolution,
    ProximityCheck,
    TransferCertificate,
    dyadic_grid,
    elasticity_transfer_check,
    infconv_deriv,
    infconv_value,
    prox_point,
)

__all__ = [
    "GrowthCheck",
    "InfConvolution",
    "ProximityCheck",
    "TransferCertificate",
    "dyadic_grid",
    "elasticity_transfer_check",
    "infconv_deriv",
    "infconv_value",
    "prox_point",
]
