import pytest

from libs.python.settings import get_bool_env, get_int_env, reload_settings


@pytest.mark.parametrize(
    ("raw", "expected"),
    [("true", True), ("YES", True), ("1", True), ("off", False), ("0", False), ("maybe", False)],
)
def test_get_bool_env_spellings(monkeypatch, raw, expected):
    monkeypatch.setenv("ORPHEUS_FLAG", raw)
    assert get_bool_env("ORPHEUS_FLAG") is expected


def test_get_bool_env_default_when_unset(monkeypatch):
    monkeypatch.delenv("ORPHEUS_FLAG", raising=False)
    assert get_bool_env("ORPHEUS_FLAG", default=True) is True


def test_get_int_env_parses_prefixes(monkeypatch):
    monkeypatch.setenv("ORPHEUS_SEED", "0x10")
    assert get_int_env("ORPHEUS_SEED") == 16

    monkeypatch.setenv("ORPHEUS_SEED", "  ")
    assert get_int_env("ORPHEUS_SEED") is None


def test_get_int_env_rejects_garbage(monkeypatch):
    monkeypatch.setenv("ORPHEUS_SEED", "seven")
    with pytest.raises(ValueError, match="ORPHEUS_SEED"):
        get_int_env("ORPHEUS_SEED")


def test_reload_settings_picks_up_environment(monkeypatch):
    monkeypatch.setenv("ORPHEUS_SEED", "42")
    monkeypatch.setenv("ORPHEUS_LOG_CONSOLE", "true")

    refreshed = reload_settings()

    assert refreshed.SEED_OVERRIDE == 42
    assert refreshed.LOG_CONSOLE is True
