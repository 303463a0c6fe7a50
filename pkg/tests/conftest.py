import numpy as np
import pytest

from hml import catalog


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def euclid3():
    return catalog.euclidean(3)


@pytest.fixture(scope="session")
def euclid4():
    return catalog.euclidean(4)


@pytest.fixture(scope="session")
def sphere3():
    return catalog.sphere(3)


@pytest.fixture(scope="session")
def sphere4():
    return catalog.sphere(4)


@pytest.fixture(scope="session")
def round_sf3():
    return catalog.space_form(0.5, 0.5, 3)


@pytest.fixture(scope="session")
def hyperbolic3():
    return catalog.space_form(0.5, -0.5, 3)


@pytest.fixture(scope="session")
def fs2():
    return catalog.fubini_study(2)
