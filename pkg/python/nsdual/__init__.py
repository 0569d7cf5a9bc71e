"""nsdual: convex duality for utility maximisation with a bounded liability.

Nonsmooth utilities, their conjugates and smoothing, finite tree markets, and
independent primal and dual solvers with a duality verifier.
"""

__version__ = "0.1.0"

from .config import NsDualSettings, get_settings
from .exceptions import ErrorCategory, ErrorCode, NsDualError
from .logging import configure_logging, get_logger

__all__ = [
    "ErrorCategory",
    "ErrorCode",
    "NsDualError",
    "NsDualSettings",
    "__version__",
    "configure_logging",
    "get_logger",
    "get_settings",
]
