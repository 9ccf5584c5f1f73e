import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(20240817))


@pytest.fixture
def small_image(rng):
    """Random 8x8 image with intensities strictly inside (0, 1)."""
    return rng.uniform(0.05, 0.95, size=(8, 8))
