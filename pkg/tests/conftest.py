import numpy as np
import pytest

from cbdp.data_types import AgeCondition, BDParams
from cbdp.phylo import parse_newick


@pytest.fixture
def yule() -> BDParams:
    return BDParams(lam=1.0)


@pytest.fixture
def birth_death() -> BDParams:
    return BDParams(lam=1.0, mu=0.5)


@pytest.fixture
def critical() -> BDParams:
    return BDParams(lam=1.0, mu=1.0)


@pytest.fixture
def prior() -> AgeCondition:
    return AgeCondition.uniform_prior()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20071)


@pytest.fixture
def cherry():
    return parse_newick("(A,B);")


@pytest.fixture
def caterpillar():
    return parse_newick("((A,B),C);")


@pytest.fixture
def balanced():
    return parse_newick("((A,B),(C,D));")
