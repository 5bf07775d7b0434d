import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from symplab.flows import Integrator
from symplab.torus import TorusGrid

settings.register_profile("symplab", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("symplab")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def intg():
    return Integrator()


@pytest.fixture(scope="session")
def grid16():
    return TorusGrid(1, 16)


@pytest.fixture(scope="session")
def grid32():
    return TorusGrid(1, 32)


@pytest.fixture(scope="session")
def grid64():
    return TorusGrid(1, 64)


_CRITERIA = []


@pytest.fixture
def criterion():
    """Record and print one pass/fail line for an acceptance criterion."""

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
        _CRITERIA.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_CRITERIA):
            terminalreporter.write_line(line)
