import os

import pytest

from libs.python.orpheus_logging import _reset_logging_state
from libs.python.settings import reload_settings


@pytest.fixture(autouse=True)
def reset_logging_state_fixture():
    """Autouse fixture giving every test a fresh logger and predictable env defaults.

    Tests must not depend on a logfire instance cached by an earlier test,
    and ``ORPHEUS_SEED`` from the developer's shell must not leak into
    config resolution.
    """
    _reset_logging_state()

    saved = {name: os.environ.get(name) for name in ("APP_ENV", "APP_VERSION", "ORPHEUS_SEED", "ORPHEUS_LOG_CONSOLE")}
    os.environ["APP_ENV"] = "local"
    os.environ["APP_VERSION"] = "dev"
    os.environ.pop("ORPHEUS_SEED", None)
    os.environ.pop("ORPHEUS_LOG_CONSOLE", None)
    reload_settings()

    try:
        yield
    finally:
        for name, value in saved.items():
            if value is None:
                os.environ.pop(name, None)
            else:
                os.environ[name] = value
        reload_settings()
        _reset_logging_state()
