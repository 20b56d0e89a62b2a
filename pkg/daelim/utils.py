import logging
import os
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError

LOG_FORMAT = '%(asctime)s | %(levelname)7s | %(name)s | line:%(lineno)4s | %(message)s'

# Environment variables read by load_settings(); a .env file is loaded by the CLI.
ENV_MAX_DIFF = "DAELIM_MAX_DIFF"
ENV_LOG_LEVEL = "DAELIM_LOG_LEVEL"
ENV_WORKERS = "DAELIM_WORKERS"
ENV_TOLERANCE = "DAELIM_TOLERANCE"

DEFAULT_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Settings:
    max_differentiations: Optional[int] = None
    log_level: str = "WARNING"
    workers: int = 1
    tolerance: float = DEFAULT_TOLERANCE


def _positive_int(name: str) -> Optional[int]:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return None
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from None
    if value < 0 or (value == 0 and name != ENV_MAX_DIFF):
        raise ConfigError(f"{name} must be positive, got {value}")
    return value


def load_settings() -> Settings:
    """
    Read daelim settings from the environment.

    :return: Settings with defaults for anything unset
    :raises ConfigError: on malformed values
    """
    level = os.getenv(ENV_LOG_LEVEL, "WARNING").upper()
    if not isinstance(logging.getLevelName(level), int):
        raise ConfigError(f"{ENV_LOG_LEVEL} is not a logging level: {level!r}")
    raw_tol = os.getenv(ENV_TOLERANCE)
    try:
        tolerance = float(raw_tol) if raw_tol else DEFAULT_TOLERANCE
    except ValueError:
        raise ConfigError(f"{ENV_TOLERANCE} must be a number, got {raw_tol!r}") from None
    return Settings(
        max_differentiations=_positive_int(ENV_MAX_DIFF),
        log_level=level,
        workers=_positive_int(ENV_WORKERS) or 1,
        tolerance=tolerance,
    )


def setup_logging(level: str = "WARNING") -> None:
    logging.basicConfig(format=LOG_FORMAT, level=getattr(logging, level.upper(), logging.WARNING))


def read_text(path: str) -> str:
    with open(path, 'r', encoding='utf-8') as f:
        return f.read()
