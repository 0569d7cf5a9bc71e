"""Logging configuration for nsdual.

structlog builds the event dictionaries; loguru owns the stderr sink. Nothing
is ever written to stdout so report files and piped output stay clean.
"""

import sys
from typing import Any, Optional

import structlog
from loguru import logger as loguru_logger

_LEVELS = {"DEBUG": 10, "INFO": 20, "WARNING": 30, "ERROR": 40, "CRITICAL": 50}

_CONSOLE_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss.SSS}</green> | <level>{level: <8}</level> | "
    "<level>{message}</level>"
)

_configured = False
_level = "INFO"
_json_output = True


class LoguruLogger:
    """structlog terminal logger that forwards rendered events to loguru."""

    def __init__(self, name: Optional[str] = None):
        self.name = name

    def _emit(self, level: str, message: str) -> None:
        loguru_logger.log(level, message)

    def debug(self, message: str) -> None:
        self._emit("DEBUG", message)

    def info(self, message: str) -> None:
        self._emit("INFO", message)

    def warning(self, message: str) -> None:
        self._emit("WARNING", message)

    warn = warning

    def error(self, message: str) -> None:
        self._emit("ERROR", message)

    def critical(self, message: str) -> None:
        self._emit("CRITICAL", message)

    exception = error
    msg = info


def _loguru_factory(*args: Any) -> LoguruLogger:
    return LoguruLogger(args[0] if args else None)


def _configure_sinks(level: str, json_output: bool) -> None:
    loguru_logger.configure(
        handlers=[
            {
                "sink": sys.stderr,
                "level": level,
                "format": "{message}" if json_output else _CONSOLE_FORMAT,
                "colorize": not json_output,
            }
        ]
    )


def _configure_structlog(level: str, json_output: bool) -> None:
    processors: list[Any] = [
        structlog.contextvars.merge_contextvars,
        structlog.processors.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        structlog.processors.UnicodeDecoder(),
    ]
    if json_output:
        processors.append(structlog.processors.JSONRenderer(sort_keys=True))
    else:
        processors.append(structlog.dev.ConsoleRenderer(colors=False))

    structlog.configure(
        processors=processors,
        logger_factory=_loguru_factory,
        wrapper_class=structlog.make_filtering_bound_logger(_LEVELS[level]),
        cache_logger_on_first_use=False,
    )


def configure_logging(level: str = "INFO", json_output: Optional[bool] = None) -> None:
    """Configure structlog and the loguru sink.

    Args:
        level: Minimum level name (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        json_output: Render events as JSON. Defaults to JSON except under pytest.
    """
    global _configured, _level, _json_output

    level = level.upper()
    if level not in _LEVELS:
        raise ValueError(f"Unknown log level '{level}'")
    if json_output is None:
        json_output = "pytest" not in sys.modules

    _configure_sinks(level, json_output)
    _configure_structlog(level, json_output)
    _configured = True
    _level = level
    _json_output = json_output


def get_logger(name: Optional[str] = None) -> Any:
    """Get a structured logger instance."""
    if not _configured:
        configure_logging(_level)
    return structlog.get_logger(name)
