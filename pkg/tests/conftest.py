import numpy as np
import pytest

from crs import PairedDistribution


@pytest.fixture(scope="session")
def tp() -> PairedDistribution:
    """Two-point pair with ratio (0.2, 1.8); most exact values below use it."""
    return PairedDistribution.finite([0.5, 0.5], [0.1, 0.9])


@pytest.fixture(scope="session")
def gauss() -> PairedDistribution:
    """N(0.5, 0.5^2) target against a standard normal proposal."""
    return PairedDistribution.gaussian(q={"mu": 0.5, "sigma": 0.5},
                                       p={"mu": 0.0, "sigma": 1.0})


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(0)
