from fractions import Fraction

import pytest

from bbrs.channel import additive_bounded, bec, typewriter
from bbrs.gamma import GammaModel
from bbrs.randomness import SharedSeed


@pytest.fixture(scope="session")
def bec_half():
    return bec(Fraction(1, 2))


@pytest.fixture(scope="session")
def tw42():
    return typewriter(4, 2)


@pytest.fixture(scope="session")
def add81():
    return additive_bounded(8, 1)


@pytest.fixture(scope="session")
def fixtures(bec_half, tw42, add81):
    return {"bec": bec_half, "typewriter": tw42, "additive": add81}


@pytest.fixture(scope="session")
def models(fixtures):
    return {name: GammaModel(ch) for name, ch in fixtures.items()}


@pytest.fixture
def seed():
    return SharedSeed.from_int(20240601)
