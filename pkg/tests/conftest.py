import pytest
from hypothesis import HealthCheck, settings

from tontine_bequest.market import MarketModel
from tontine_bequest.mortality import MortalityModel

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def makeham():
    return MortalityModel()


@pytest.fixture(scope="session")
def market():
    return MarketModel()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
