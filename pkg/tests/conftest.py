import numpy as np
import pytest

from merogeo.sphere import SphereConnection


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def circle_conn():
    """R = -1/z: geodesics through z = 1 with velocity i are the unit circle."""
    return SphereConnection.from_source("-1/z")
