import numpy as np
import pytest

from evarbai.measures import DiscreteDistribution


def random_law(rng, max_atoms=4):
    n = int(rng.integers(1, max_atoms + 1))
    return DiscreteDistribution(rng.uniform(0, 1, n), rng.dirichlet(np.ones(n)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def bern():
    return DiscreteDistribution.bernoulli
