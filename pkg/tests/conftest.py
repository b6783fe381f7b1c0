import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nonholo import catalogue

settings.register_profile("nonholo", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("nonholo")

ACCEPTANCE = []


@pytest.fixture
def contact():
    return catalogue.preset("contact")


@pytest.fixture
def cvt():
    return catalogue.preset("cvt")


@pytest.fixture
def decoupled():
    return catalogue.preset("decoupled")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    """Record one acceptance line; printed again in the terminal summary."""

    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}"
        ACCEPTANCE.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
