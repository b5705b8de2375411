import numpy as np
import pytest

from heatlab import grid as g


@pytest.fixture(scope="session")
def spec40():
    """Wide box for pure-Gaussian tests (matches the documented L >= 40 cases)."""
    return g.make_grid(1, 256, 40.0)


@pytest.fixture(scope="session")
def spec8pi():
    """Drift-bearing box: L = 8*pi makes cos(x) an exact grid mode."""
    return g.make_grid(1, 256, 8 * np.pi)


@pytest.fixture(scope="session")
def spec8pi_small():
    return g.make_grid(1, 128, 8 * np.pi)


@pytest.fixture(scope="session")
def spec2d():
    return g.make_grid(2, 64, 20.0)
