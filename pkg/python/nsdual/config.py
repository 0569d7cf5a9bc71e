"""Runtime configuration for nsdual.

All numerical tolerances live here. Values come from keyword arguments,
then ``NSDUAL_*`` environment variables, then the defaults below.
"""

from functools import lru_cache
from typing import Any, Dict, Mapping, Tuple

from pydantic import Field, ValidationError as PydanticValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ErrorCode, ValidationError

TOLERANCE_FIELDS = (
    "tol_conj_closed",
    "tol_conj_numeric",
    "tol_prox",
    "tol_solve",
    "tol_replication",
    "tol_bisection",
    "tol_membership",
    "tol_inclusion",
)


class NsDualSettings(BaseSettings):
    """Tolerances, search caps and output defaults."""

    model_config = SettingsConfigDict(
        env_prefix="NSDUAL_", case_sensitive=False, frozen=True, extra="ignore"
    )

    # Tolerances
    tol_conj_closed: float = Field(1e-10, description="Closed-form conjugate checks", gt=0)
    tol_conj_numeric: float = Field(1e-6, description="Numeric conjugate refinement", gt=0)
    tol_prox: float = Field(1e-10, description="Proximal point bisection width", gt=0)
    tol_solve: float = Field(1e-6, description="Relative duality gap target", gt=0)
    tol_replication: float = Field(1e-8, description="Replication residual scale", gt=0)
    tol_bisection: float = Field(1e-8, description="Indifference price bisection", gt=0)
    tol_membership: float = Field(1e-9, description="Polytope membership", gt=0)
    tol_inclusion: float = Field(1e-5, description="Atomwise subdifferential inclusion", gt=0)

    # Search caps
    max_bisection_iterations: int = Field(200, ge=1)
    vertex_cap: int = Field(10_000, ge=1)
    smoothing_levels: Tuple[float, ...] = (1e1, 1e2, 1e3, 1e4, 1e5, 1e6)
    elasticity_depth: int = Field(40, ge=4, description="Grid depth K for y = 2^(+-k)")
    elasticity_cap: float = Field(1e3, gt=0)
    r_detection_cap_exponent: int = Field(60, ge=4)
    ascent_iterations: int = Field(400, ge=1)

    # Output
    output_dir: str = Field("nsdual-out", description="Default report directory")
    log_level: str = Field("INFO", description="Logging level")

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level."""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(f"log_level must be one of {valid_levels}")
        return v.upper()

    @field_validator("smoothing_levels")
    @classmethod
    def validate_smoothing_levels(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        """Smoothing levels must be positive and strictly increasing."""
        if not v:
            raise ValueError("smoothing_levels must not be empty")
        if any(level <= 0 for level in v):
            raise ValueError("smoothing levels must be positive")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("smoothing levels must be strictly increasing")
        return tuple(float(level) for level in v)

    def with_overrides(self, overrides: Mapping[str, Any]) -> "NsDualSettings":
        """Return a copy with ``--tol name=value`` style overrides applied.

        Args:
            overrides: Mapping from a short tolerance name (``solve``) or a full
                field name (``tol_solve``) to its new value

        Returns:
            A re-validated settings instance

        Raises:
            ValidationError: If a name is unknown or a value is invalid
        """
        updates: Dict[str, Any] = {}
        for name, value in overrides.items():
            key = name if name in type(self).model_fields else f"tol_{name}"
            if key not in type(self).model_fields:
                raise ValidationError(
                    f"Unknown tolerance '{name}'",
                    error_code=ErrorCode.INVALID_TOLERANCE,
                    field=name,
                    details={"known": list(TOLERANCE_FIELDS)},
                )
            updates[key] = value

        merged = {**self.model_dump(), **updates}
        try:
            return type(self)(**merged)
        except PydanticValidationError as e:
            raise ValidationError(
                "Invalid tolerance override",
                error_code=ErrorCode.INVALID_TOLERANCE,
                details={"errors": [err["msg"] for err in e.errors()]},
            ) from e


@lru_cache(maxsize=1)
def get_settings() -> NsDualSettings:
    """Process-wide settings, read once from the environment."""
    return NsDualSettings()
