import os
from fractions import Fraction

import pytest

from app.models.instance import Problem
from app.services.demand.problem import build_problem
from app.services.instances.examples import gen_example


@pytest.fixture(autouse=True)
def clean_environment(mocker):
    """Isole les tests des variables TRANSITFLUX_* de la machine."""
    cleaned = {k: v for k, v in os.environ.items() if not k.startswith("TRANSITFLUX_")}
    mocker.patch.dict(os.environ, cleaned, clear=True)


@pytest.fixture
def example_problem():
    """Fabrique : nom du catalogue (et paramètre éventuel) -> Problem."""

    def factory(name: str, param=None) -> Problem:
        return build_problem(gen_example(name, None if param is None else Fraction(param)))

    return factory


@pytest.fixture
def fig1(example_problem) -> Problem:
    return example_problem("fig1")


@pytest.fixture
def fig4(example_problem) -> Problem:
    return example_problem("fig4")


@pytest.fixture
def fig6(example_problem) -> Problem:
    return example_problem("fig6")
