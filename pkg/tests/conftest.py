import numpy as np
import pytest

from hyperwave.reference import reference_setup


@pytest.fixture
def setup_1d():
    return reference_setup(1, 8, 16, 0.2, nonlinear=True)


@pytest.fixture
def setup_1d_quadratic():
    return reference_setup(1, 8, 16, 0.2, nonlinear=False)


@pytest.fixture
def setup_2d():
    return reference_setup(2, 6, 16, 0.2, nonlinear=True)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[num].line())
