import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qkdv.model import kdv_problem, polynomial_problem, validate_problem

settings.register_profile("qkdv", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile("qkdv")

TWO_PI = 2 * np.pi

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def kdv():
    return validate_problem(kdv_problem(TWO_PI, (-3.0, 5.0)))


@pytest.fixture(scope="session")
def quad_kappa():
    """kappa(v) = 1 + v^2, p(v) = v^2/2."""
    return validate_problem(polynomial_problem([0.0, 0.0, 0.5], [1.0, 0.0, 1.0], TWO_PI, (-2.0, 2.0)))


@pytest.fixture(scope="session")
def unit_kappa():
    """kappa = 1 with a cubic nonlinearity, so a' is not constant."""
    return validate_problem(polynomial_problem([0.0, 0.3, 0.5, 0.2], [1.0], TWO_PI, (-2.0, 2.0)))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
