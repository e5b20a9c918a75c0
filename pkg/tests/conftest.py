import pytest

from config import get_settings


def pytest_addoption(parser):
    parser.addoption("--long", action="store_true", default=False,
                     help="run long convergence studies")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--long"):
        return
    skip_long = pytest.mark.skip(reason="needs --long")
    for item in items:
        if "long" in item.keywords:
            item.add_marker(skip_long)


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    for name in ("QUAD_ABSCISSAE", "QUAD_MOMENT_LIMIT", "QUAD_MOMENT_EPSABS",
                 "QUAD_MOMENT_EPSREL", "QUAD_GAUSS_NODES", "QUAD_RESULTS_DIR"):
        monkeypatch.delenv(name, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
