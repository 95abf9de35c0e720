import numpy as np
import pytest

from kinlag import flux as fluxmod
from kinlag import lagrangian, scalar


@pytest.fixture(scope="session")
def burgers():
    return fluxmod.burgers()


@pytest.fixture(scope="session")
def shock_solution(burgers):
    u0 = scalar.PiecewiseConstantFn([0.0], [1.0, 0.0])
    return scalar.front_track(u0, burgers, 1.0, 1 / 256)


@pytest.fixture(scope="session")
def rarefaction_solution(burgers):
    u0 = scalar.PiecewiseConstantFn([0.0], [0.0, 1.0])
    return scalar.front_track(u0, burgers, 1.0, 1 / 256)


@pytest.fixture(scope="session")
def shock_family(shock_solution):
    return lagrangian.build_hypograph_rep(shock_solution, 256)


@pytest.fixture(scope="session")
def shock_measures(shock_family):
    return lagrangian.aggregate_measures(shock_family)


def random_data(seed, pieces=50, quantum=1 / 64):
    return scalar.random_piecewise(pieces, np.random.default_rng(seed), (0.0, 1.0), quantum)
