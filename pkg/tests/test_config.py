import pytest

from config import Settings, get_settings
from errors import ConfigError


def test_defaults():
    settings = get_settings()
    assert settings.abscissae == "equispaced"
    assert settings.moment_limit == 60
    assert settings.gauss_nodes == 24
    assert settings.moment_epsabs == pytest.approx(1e-13)


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("QUAD_ABSCISSAE", "Nodes")
    monkeypatch.setenv("QUAD_GAUSS_NODES", "32")
    settings = Settings.from_env()
    assert settings.abscissae == "nodes"
    assert settings.gauss_nodes == 32


@pytest.mark.parametrize("name, value", [
    ("QUAD_ABSCISSAE", "chebyshev"),
    ("QUAD_MOMENT_LIMIT", "many"),
    ("QUAD_MOMENT_EPSREL", "tight"),
    ("QUAD_MOMENT_LIMIT", "0"),
    ("QUAD_GAUSS_NODES", "1"),
])
def test_invalid_values(monkeypatch, name, value):
    monkeypatch.setenv(name, value)
    with pytest.raises(ConfigError):
        Settings.from_env()


def test_settings_are_cached():
    assert get_settings() is get_settings()
