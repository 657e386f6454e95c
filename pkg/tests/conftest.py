import numpy as np
import pytest

from reklab.generators import gen_synthetic
from reklab.linalg import project_range, project_row_space
from reklab.sampling import RngStream

# filled by test_acceptance.py; printed once at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_inconsistent():
    """3x2, rank 2, b has a nonzero null(A^T) component."""
    return gen_synthetic(3, 2, [2.0, 0.7], inconsistent=True, rng=RngStream(11))


@pytest.fixture
def small_inconsistent():
    """5x3, rank 3, inconsistent."""
    return gen_synthetic(5, 3, [1.8, 1.0, 0.6], inconsistent=True, rng=RngStream(21))


def random_start(problem, seed=0):
    """x0 in range(A^T) and z0 in b + range(A), both generic."""
    g = np.random.default_rng(seed)
    x0 = project_row_space(problem.svd, g.standard_normal(problem.n))
    z0 = problem.b + project_range(problem.svd, g.standard_normal(problem.m))
    return x0, z0
