"""Operations on utilities: conjugation, shifts, truncation, normalisation."""

from typing import Optional, Tuple

from ..config import NsDualSettings
from ..exceptions import ErrorCode, ValidationError
from ..intervals import Interval
from ..logging import get_logger
from .conjugate import ConjugateFunction, NumericConjugate
from .utility import Shifted, Truncated, Utility

logger = get_logger("convex.transforms")


def conjugate(
    utility: Utility, numeric: bool = False, settings: Optional[NsDualSettings] = None
) -> ConjugateFunction:
    """Fenchel conjugate ``Ũ(y) = sup_x (U(x) - x*y)``.

    Args:
        utility: The utility to conjugate
        numeric: Force the bisection-based evaluator even when a closed form exists
        settings: Tolerances for the numeric evaluator

    Returns:
        Closed-form conjugate for every built-in family, numeric otherwise

    Raises:
        ValidationError: If the conjugate domain is empty or ``r <= 0``
    """
    conj = NumericConjugate(utility, settings) if numeric else utility.conjugate()
    lo, hi = conj.domain
    if not hi > 0 or lo > hi:
        raise ValidationError(
            "Conjugate has an empty effective domain",
            error_code=ErrorCode.INVALID_UTILITY,
            details={"domain": [lo, hi], "family": utility.family},
        )
    logger.debug(
        "Built conjugate",
        family=utility.family,
        conjugate=type(conj).__name__,
        domain=[lo, hi],
    )
    return conj


def subdiff_conjugate(conj: ConjugateFunction, y: float) -> Interval:
    """``[min ∂Ũ(y), max ∂Ũ(y)]`` for ``y`` in ``[0, r)``."""
    return conj.subdiff(y)


def shift(utility: Utility, k1: float, k2: float) -> Utility:
    """``Uᵏ(x) = U(x - k1) + k2``; the identity shift returns ``utility`` itself."""
    if k1 == 0.0 and k2 == 0.0:
        return utility
    return Shifted(utility, k1, k2)


def truncate(utility: Utility, n: float) -> Utility:
    """Restrict ``utility`` to ``[-n, inf)``; vacuous when the domain already is."""
    if utility.domain_left >= -n:
        return utility
    return Truncated(utility, n)


def normalize(utility: Utility) -> Tuple[Utility, float]:
    """Shift values so that ``U(0) > 0``.

    Uses the smallest value shift making ``U(0) = 1`` when ``U(0) <= 0`` and
    leaves positive utilities alone.

    Returns:
        The shifted utility and the value shift ``k2`` that was added
    """
    u0 = float(utility.value(0.0))
    k2 = 1.0 - u0 if u0 <= 0 else 0.0
    return shift(utility, 0.0, k2), k2
