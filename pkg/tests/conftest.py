import pytest
from hypothesis import settings

from sgfractal.lattice import cached_lattice

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture(scope="session")
def lat():
    """Factory for cached lattices."""
    return cached_lattice

