import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rssmap import bundled_scene  # noqa: E402


@pytest.fixture(scope="session")
def scene():
    """Full-resolution bundled scene at 2.48 GHz."""
    return bundled_scene()


@pytest.fixture(scope="session")
def small_scene():
    """Same room and aperture sampled on a coarse 21x10 grid."""
    return bundled_scene(21, 10)


@pytest.fixture(scope="session")
def half_scene():
    return bundled_scene(81, 40)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
