import numpy as np
import pytest

from qbn.familyout import dataset, learned_network, structure
from qbn.oracle import build_joint


@pytest.fixture(scope="session")
def family_structure():
    return structure()


@pytest.fixture(scope="session")
def family_data():
    return dataset()


@pytest.fixture()
def family_net():
    return learned_network()


@pytest.fixture(scope="session")
def family_joint(family_structure, family_data):
    return build_joint(family_structure, family_data)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260813)
