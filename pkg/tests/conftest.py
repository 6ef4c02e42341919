import pytest

from skre.group import get_group
from skre.rng import make_rng


@pytest.fixture(scope="session")
def group():
    return get_group()


@pytest.fixture
def rng():
    return make_rng(1234)
