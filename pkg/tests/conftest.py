import numpy as np
import pytest
from hypothesis import settings

from codedit.ode import make_grid
from codedit.schedule import make_linear_schedule
from codedit.score import GmmScoreModel, named_template_prior, toy_gmm_2d

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def schedule():
    return make_linear_schedule()


@pytest.fixture(scope="session")
def grid(schedule):
    return make_grid(schedule, 200)


@pytest.fixture(scope="session")
def image_prior():
    return named_template_prior("patterns16", 0.1)


@pytest.fixture(scope="session")
def image_model(image_prior, schedule):
    return GmmScoreModel(image_prior, schedule)


@pytest.fixture(scope="session")
def toy_prior():
    return toy_gmm_2d()


@pytest.fixture(scope="session")
def toy_model(toy_prior, schedule):
    return GmmScoreModel(toy_prior, schedule)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
