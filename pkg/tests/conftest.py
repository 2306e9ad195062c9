import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "repo", deadline=None, derandomize=True, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def rep2():
    from hypcocycles.group_words import genus2_standard_rep

    return genus2_standard_rep()


@pytest.fixture(scope="session")
def schottky():
    from hypcocycles.group_words import schottky_rank2

    return schottky_rank2()


@pytest.fixture(scope="session")
def octagon():
    from hypcocycles.surface_model import default_octagon

    return default_octagon()


@pytest.fixture(scope="session")
def fingers():
    from hypcocycles.finger_push import build_finger_system

    return build_finger_system()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one PASS/FAIL line per acceptance criterion."""

    def log(n, title, ok, detail=""):
        line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
        _ACCEPTANCE_LINES.append((n, line))
        print(line)
        return ok

    return log


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
