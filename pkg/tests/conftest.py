import numpy as np
import pytest
from hypothesis import settings

from crplap.mesh import make_lshape_mesh, make_unit_square_mesh

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture(scope="session")
def square4():
    return make_unit_square_mesh(4)


@pytest.fixture(scope="session")
def square12():
    return make_unit_square_mesh(12)


@pytest.fixture(scope="session")
def lshape2():
    return make_lshape_mesh(2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
