# config.py
import os
import logging
import shutil
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv
from rich.logging import RichHandler

logger = logging.getLogger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

# Defaults used when neither the environment nor a flag sets a value
DEFAULTS: Dict[str, Any] = {
    "PROSWAP_SEED": None,
    "PROSWAP_LOG_LEVEL": "WARNING",
    "PROSWAP_ELL": 3,
    "PROSWAP_LAMBDA": 16,
    "PROSWAP_NU": "8",
    "PROSWAP_T_P": 10,
    "PROSWAP_T_D": 20,
    "PROSWAP_WORKERS": 1,
}

_INT_VARS = ("PROSWAP_ELL", "PROSWAP_LAMBDA", "PROSWAP_T_P", "PROSWAP_T_D", "PROSWAP_WORKERS")


def load_env_file(env_path: str) -> bool:
    """Load environment variables from a file."""
    if os.path.exists(env_path):
        load_dotenv(env_path)
        logger.info(f"Loaded environment from {env_path}")
        return True
    return False


def create_env_from_example(directory: str = ".") -> bool:
    """Create .env file from .env.example if it doesn't exist."""
    env_path = Path(directory) / ".env"
    example_path = Path(directory) / ".env.example"

    if not env_path.exists() and example_path.exists():
        try:
            shutil.copy(example_path, env_path)
            logger.info("Created .env from .env.example")
            load_dotenv(env_path)
            return True
        except OSError as e:
            logger.error(f"Failed to create .env from example: {str(e)}")
            return False
    return False


def _parse_int(var: str, raw: str, minimum: int) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{var} must be an integer, got {raw!r}") from None
    if value < minimum:
        raise ValueError(f"{var} must be at least {minimum}, got {value}")
    return value


def validate_config() -> Dict[str, Any]:
    """Read the PROSWAP_* variables, apply defaults and type-check them."""
    config = dict(DEFAULTS)
    errors = []

    for var in _INT_VARS:
        raw = os.getenv(var)
        if raw:
            try:
                config[var] = _parse_int(var, raw, 1 if var in ("PROSWAP_WORKERS",) else 0)
            except ValueError as e:
                errors.append(str(e))

    seed = os.getenv("PROSWAP_SEED")
    if seed:
        try:
            config["PROSWAP_SEED"] = _parse_int("PROSWAP_SEED", seed, 0)
            if config["PROSWAP_SEED"] >= 2 ** 64:
                errors.append("PROSWAP_SEED must fit in 64 bits")
        except ValueError as e:
            errors.append(str(e))

    nu = os.getenv("PROSWAP_NU")
    if nu:
        config["PROSWAP_NU"] = nu

    level = os.getenv("PROSWAP_LOG_LEVEL")
    if level:
        if level.upper() not in LOG_LEVELS:
            errors.append(f"PROSWAP_LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}, got {level!r}")
        else:
            config["PROSWAP_LOG_LEVEL"] = level.upper()

    if errors:
        error_msg = f"Invalid configuration: {'; '.join(errors)}"
        logger.error(error_msg)
        raise ValueError(error_msg)

    return config


def setup_config(directory: str = ".", create_env: bool = False) -> Dict[str, Any]:
    """Load .env (or .env.example) if present, then validate.

    .env is only written from .env.example when create_env is set.
    """
    env_file = str(Path(directory) / ".env")
    if not load_env_file(env_file):
        if create_env and create_env_from_example(directory):
            logger.info("Created and loaded .env from .env.example")
        elif load_env_file(str(Path(directory) / ".env.example")):
            logger.info("Using .env.example as .env file not found")
        else:
            logger.debug("No environment file found, using defaults")
    return validate_config()


def setup_logging(level: Optional[str] = None) -> None:
    """Route all module loggers through a RichHandler."""
    level = (level or os.getenv("PROSWAP_LOG_LEVEL") or DEFAULTS["PROSWAP_LOG_LEVEL"]).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(rich_tracebacks=True)],
        force=True,
    )
