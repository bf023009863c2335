import pytest

from dockirl.dataset import generate_dataset
from dockirl.world import WorldConfig, build_world


@pytest.fixture(scope="session")
def basin():
    """A representative dock world."""
    return build_world(WorldConfig(seed=0))


@pytest.fixture(scope="session")
def small_dataset():
    """Three train + one test demonstration; shared across IO/trainer/CLI tests."""
    return generate_dataset(3, 1, 100)
