"""
Shared pytest fixtures
"""
import pytest

from backend.core.datasets import builtin_population
from backend.core.population import PopulationSummary


@pytest.fixture
def pop1():
    return builtin_population(1)


@pytest.fixture
def pop2():
    return builtin_population(2)


@pytest.fixture
def pop1_two_phase():
    return builtin_population(1, two_phase=True)


@pytest.fixture
def pop2_two_phase():
    return builtin_population(2, two_phase=True)


@pytest.fixture
def pop1_profile():
    """Population I moment profile used as a synthetic target"""
    return PopulationSummary(N=89, n=20, y_mean=3.36, P=0.1236, C_y=0.604, C_p=2.19012, rho_pb=0.766)


@pytest.fixture
def celery_eager():
    from backend.propest.celery import app

    previous = (app.conf.task_always_eager, app.conf.task_eager_propagates)
    app.conf.task_always_eager = True
    app.conf.task_eager_propagates = True
    yield app
    app.conf.task_always_eager, app.conf.task_eager_propagates = previous
