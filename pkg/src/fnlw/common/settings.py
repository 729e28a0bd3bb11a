import logging
import os


logger = logging.getLogger(__name__)


def env_str(name: str, default: str) -> str:
    """Read a string environment variable and normalize whitespace."""
    value = os.getenv(name)
    if not value:
        return default
    return value.strip()


def optional_env(name: str) -> str | None:
    value = os.getenv(name)
    if value is None:
        return None
    value = value.strip()
    return value if value else None


def env_int(name: str, default: int, *, minimum: int = 1) -> int:
    """Read a positive integer environment variable.

    Unparseable or out-of-range values are logged and replaced by `default`.
    """

    raw = optional_env(name)
    if raw is None:
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning("Ignoring %s=%r (not an integer), using %d", name, raw, default)
        return default
    if value < minimum:
        logger.warning("Ignoring %s=%d (must be >= %d), using %d", name, value, minimum, default)
        return default
    return value


def sweep_threads() -> int:
    """Worker cap for sweeps: `FNLW_THREADS`, else the number of logical cores."""
    return env_int("FNLW_THREADS", os.cpu_count() or 1)


def log_level() -> str:
    return env_str("FNLW_LOG_LEVEL", "INFO").upper()
