"""
Environment-driven settings shared by the logging wrapper and the CLI.

Values are read once at import time into a module-level ``settings``
instance. Tests that change the environment call ``reload_settings()``.

Example:
    from .settings import settings

    if settings.SEED_OVERRIDE is not None:
        seed = settings.SEED_OVERRIDE
"""

from __future__ import annotations

import os


def get_bool_env(name: str, default: bool = False) -> bool:
    """
    Parses an environment variable as a boolean value.

    Common spellings ("true", "1", "yes", "on" and their opposites) are
    recognised case-insensitively; anything else yields ``default``.
    """
    truthy = {"true", "1", "t", "yes", "y", "on"}
    falsy = {"false", "0", "f", "no", "n", "off"}

    raw_value = os.getenv(name)
    if raw_value is None:
        return bool(default)

    normalized = raw_value.strip().lower()
    if normalized in truthy:
        return True
    if normalized in falsy:
        return False
    return bool(default)


def get_int_env(name: str) -> int | None:
    """
    Parses an environment variable as an integer.

    Returns None when the variable is unset or blank. A value that is not an
    integer raises ``ValueError`` naming the variable.
    """
    raw_value = os.getenv(name)
    if raw_value is None or not raw_value.strip():
        return None
    try:
        return int(raw_value.strip(), 0)
    except ValueError as exc:
        raise ValueError(f"{name} must be an integer, got {raw_value!r}") from exc


class OrpheusSettings:
    """
    Settings read from the environment.

    Attributes:
        LOG_CONSOLE: Echo log events to the console (``ORPHEUS_LOG_CONSOLE``).
        SEED_OVERRIDE: Replaces the configured pipeline seed when set
            (``ORPHEUS_SEED``).
    """

    def __init__(self) -> None:
        self.LOG_CONSOLE: bool = False
        self.SEED_OVERRIDE: int | None = None
        self.refresh()

    def refresh(self) -> None:
        """Re-reads every setting from the environment."""
        self.LOG_CONSOLE = get_bool_env("ORPHEUS_LOG_CONSOLE")
        self.SEED_OVERRIDE = get_int_env("ORPHEUS_SEED")


settings = OrpheusSettings()


def reload_settings() -> OrpheusSettings:
    """Re-reads the environment into the shared ``settings`` instance."""
    settings.refresh()
    return settings
