import numpy as np
import pytest

from sparsecollab import build_forms, build_scenario


@pytest.fixture
def s1():
    """Single sensor with the default parameters."""
    return build_scenario(1, 0)


@pytest.fixture
def f1(s1):
    return build_forms(s1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
