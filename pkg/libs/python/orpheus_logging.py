"""
Logfire helpers for structured logging across the orpheus-score toolkit.

Every module in ``libs.orpheus_score`` logs through this wrapper instead of
configuring logfire (or the standard ``logging`` module) on its own. The
wrapper configures logfire once per process, binds the standard metadata
(service, environment, application version) and hands out loggers tagged
with a category so data-quality events can be filtered from ordinary
pipeline progress.

Example:
    from libs.python.orpheus_logging import LogCategory, get_logger

    log = get_logger(LogCategory.DATA_QUALITY, stage="normalize")
    log.info("padded {count} short measures", count=3)
"""

from __future__ import annotations

import os
from collections.abc import Mapping, Sequence
from typing import Literal, Protocol, TypedDict, Unpack, cast

from .settings import settings

DEFAULT_SERVICE_NAME = "orpheus-score"


class LogfireLogger(Protocol):
    def with_settings(self, *, tags: Sequence[str]) -> LogfireLogger: ...

    def debug(self, msg_template: str, /, **attributes: object) -> None: ...

    def info(self, msg_template: str, /, **attributes: object) -> None: ...

    def warn(self, msg_template: str, /, **attributes: object) -> None: ...

    def error(self, msg_template: str, /, **attributes: object) -> None: ...

    def exception(self, msg_template: str, /, **attributes: object) -> None: ...


class LogfireModule(Protocol):
    def configure(self, **kwargs: object) -> LogfireLogger: ...


_LOGFIRE_INSTANCE: LogfireLogger | None = None


try:
    import logfire as _logfire_module
except Exception:  # pragma: no cover

    class _FallbackLogfire(LogfireLogger):
        def with_settings(self, *, tags: Sequence[str]) -> _FallbackLogfire:
            return self

        def debug(self, msg_template: str, /, **attributes: object) -> None:
            return None

        def info(self, msg_template: str, /, **attributes: object) -> None:
            return None

        def warn(self, msg_template: str, /, **attributes: object) -> None:
            return None

        def error(self, msg_template: str, /, **attributes: object) -> None:
            return None

        def exception(self, msg_template: str, /, **attributes: object) -> None:
            return None

    class _FallbackLogfireModule(LogfireModule):
        def configure(self, **kwargs: object) -> _FallbackLogfire:
            return _FallbackLogfire()

    _logfire_api: LogfireModule = _FallbackLogfireModule()
else:
    _logfire_api = cast(LogfireModule, _logfire_module)


class ConfigureOptions(TypedDict, total=False):
    local: bool
    token: str | None
    service_version: str | None
    console: object | Literal[False] | None
    min_level: int | str | None
    inspect_arguments: bool | None
    scrubbing: object | Literal[False] | None


def configure_logger(
    service: str | None = None,
    *,
    environment: str | None = None,
    send_to_logfire: bool | Literal["if-token-present"] | None = None,
    **options: Unpack[ConfigureOptions],
) -> LogfireLogger:
    """
    Configures the global Logfire instance (if not already done) and returns a logger.

    Logfire is configured only once per process. The first call decides the
    service name, environment and export behaviour; later calls return the
    cached logger with the standard metadata applied.

    Args:
        service: Service name. Falls back to ``SERVICE_NAME`` and then to
            ``orpheus-score``.
        environment: Optional environment name override.
        send_to_logfire: Whether spans and logs are exported. Defaults to
            ``"if-token-present"``.
        **options: Forwarded to ``logfire.configure()``.

    Returns:
        A logger with the default metadata pre-applied.
    """
    service_name = _resolve_service_name(service)
    logger = _configure_global_logfire(
        service_name=service_name,
        environment=environment,
        send_to_logfire=send_to_logfire,
        **options,
    )
    return _apply_metadata(logger, default_metadata(service_name))


def default_metadata(service: str | None = None) -> dict[str, str]:
    """
    Builds the metadata attached to every log event.

    Args:
        service: Service name; resolved from ``SERVICE_NAME`` when omitted.

    Returns:
        Mapping with ``service``, ``environment`` and ``application_version``.
    """
    return {
        "service": _resolve_service_name(service),
        "environment": os.getenv("APP_ENV", "local"),
        "application_version": os.getenv("APP_VERSION", "dev"),
    }


def get_logger(category: str | None = None, **kwargs: object) -> LogfireLogger:
    """
    Returns a logger tagged with the shared metadata plus a category.

    Args:
        category: One of the ``LogCategory`` values.
        **kwargs: Extra metadata bound as tags (``stage="normalize"``...).
    """
    logger = _configure_global_logfire(service_name=_resolve_service_name(None))

    metadata: dict[str, object] = {**default_metadata()}
    if category:
        metadata["category"] = category
    metadata.update(kwargs)
    return _apply_metadata(logger, metadata)


class LogCategory:
    """
    Standard log categories.

    Attributes:
        APP: CLI and use-case flow (commands started, files written).
        DATA_QUALITY: Repairs, snaps, clamps, skipped inputs and decode recovery.
        AUGMENT: Mutation and section-sampling decisions.
    """

    APP = "app"
    DATA_QUALITY = "data_quality"
    AUGMENT = "augment"


def _resolve_service_name(service: str | None) -> str:
    """Resolves the service name from an argument or environment variable."""
    if service is not None:
        return service
    env_value = os.getenv("SERVICE_NAME", DEFAULT_SERVICE_NAME)
    return env_value if env_value else DEFAULT_SERVICE_NAME


def _configure_global_logfire(
    service_name: str,
    *,
    environment: str | None = None,
    send_to_logfire: bool | Literal["if-token-present"] | None = None,
    **options: Unpack[ConfigureOptions],
) -> LogfireLogger:
    """Configures the global Logfire instance once and returns the shared logger."""
    global _LOGFIRE_INSTANCE

    if _LOGFIRE_INSTANCE is None:
        configure_kwargs: ConfigureOptions = cast(ConfigureOptions, {**options})
        if "console" not in configure_kwargs and not settings.LOG_CONSOLE:
            configure_kwargs["console"] = False

        _LOGFIRE_INSTANCE = _logfire_api.configure(
            service_name=service_name,
            environment=environment or os.getenv("APP_ENV", "local"),
            send_to_logfire=send_to_logfire if send_to_logfire is not None else "if-token-present",
            **configure_kwargs,
        )

    return _LOGFIRE_INSTANCE


def _reset_logging_state() -> None:
    """
    Drops the cached Logfire instance.

    Test-only: lets each test configure logging in isolation.
    """
    global _LOGFIRE_INSTANCE
    _LOGFIRE_INSTANCE = None


def _apply_metadata(logger: LogfireLogger, metadata: Mapping[str, object]) -> LogfireLogger:
    """Applies a dictionary of metadata to a logger instance as tags."""
    tags = tuple(f"{key}:{value}" for key, value in metadata.items() if value is not None)
    if not tags:
        return logger
    return logger.with_settings(tags=tags)
