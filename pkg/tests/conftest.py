import numpy as np
import pytest

from trustfit import Dataset, gaussian2d, pixel_grid

GAUSS_TRUTH = np.array([1.5, 30.2, 33.1, 6.0, 9.0, 0.7, 0.2])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def gaussian_image():
    """Noise-free 64x64 rotated Gaussian and its truth parameters."""
    grid = pixel_grid((64, 64))
    return Dataset(grid, gaussian2d(grid, GAUSS_TRUTH)), GAUSS_TRUTH.copy()
