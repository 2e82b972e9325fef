from functools import lru_cache

import pytest

from pgeo.modelfile import fixture_names, load_file
from pgeo.penrose import validate_adapted


@lru_cache(maxsize=None)
def fixture(name):
    return load_file(name)


@lru_cache(maxsize=None)
def adapted(name):
    mf = fixture(name)
    return validate_adapted(mf.model, mf.roles)


METRIC_FIXTURES = [n for n in fixture_names() if fixture(n).kind == "metric"]
ADAPTED_FIXTURES = [n for n in METRIC_FIXTURES if fixture(n).roles]
ALGEBRA_FIXTURES = [n for n in fixture_names() if fixture(n).kind == "algebra"]


@pytest.fixture
def load():
    return fixture


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
