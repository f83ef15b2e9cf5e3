import numpy as np
import pytest
from hypothesis import settings

from swarmphase.golden import table_s2

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def golden():
    return table_s2()


@pytest.fixture
def rng():
    return np.random.default_rng(20101)


def random_state(rng, photons):
    z = rng.normal(size=photons + 1) + 1j * rng.normal(size=photons + 1)
    return z / np.linalg.norm(z)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(name: str, passed: bool, detail: str):
    ACCEPTANCE_LINES.append(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
