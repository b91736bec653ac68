import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hessianlab.potentials import example

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def expsum():
    return example("expsum")


@pytest.fixture
def neglog():
    return example("neglog")


@pytest.fixture
def quadratic():
    return example("quadratic")


@pytest.fixture
def ricci_flat2():
    return example("ricci_flat2")


@pytest.fixture
def ricci_flat3():
    return example("ricci_flat3")


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def record(number, title, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {title}"
        if detail:
            line += f"  ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
