import pytest

from mfwaves.distributions import Exponential, Power2Increment, RngStream
from mfwaves.smoothing import iterate_pool


def pytest_addoption(parser):
    parser.addoption(
        "--skip-slow", action="store_true", default=False,
        help="skip the heavy Monte Carlo tests (acceptance suite still runs them)",
    )


def pytest_collection_modifyitems(config, items):
    if not config.getoption("--skip-slow"):
        return
    marker = pytest.mark.skip(reason="--skip-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(marker)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: heavy Monte Carlo test")


@pytest.fixture(scope="session")
def pool_power2_exp():
    """Converged power2-exp pool (gamma = 1) shared across module tests."""
    inc = Power2Increment(Exponential(1.0), 0.0)
    return iterate_pool(inc, 1.0, 100_000, 50, rng=RngStream(42))


@pytest.fixture()
def gen():
    return RngStream(20240811).generator()


@pytest.fixture()
def rng_stream():
    return RngStream(20240811)
