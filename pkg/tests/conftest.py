import numpy as np
import pytest

from learnlink import worlds
from learnlink.geometry import make_rng

# lines printed after the run, one per acceptance criterion
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return make_rng(12345)


@pytest.fixture(scope="session")
def open_env():
    return worlds.open_world()


@pytest.fixture(scope="session")
def sealed_env():
    return worlds.sealed_chambers()


@pytest.fixture(scope="session")
def rooms_env():
    return worlds.two_rooms()


def free_points(env, n, seed=0):
    from learnlink.planners import sample_free
    r = make_rng(seed)
    return np.array([sample_free(env, r) for _ in range(n)])


@pytest.fixture(scope="session")
def rooms_training(rooms_env):
    """Oracle mask for the corridor world: 50 problems x 3 repetitions."""
    from learnlink.criticality import generate_training_data
    return generate_training_data(rooms_env, 50, 3, None, make_rng(1))
