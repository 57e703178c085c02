import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from focalstyle import ImageTensor
from focalstyle.backends.toy import ToyQuadrantBackend

settings.register_profile(
    "ci",
    max_examples=50,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def toy_backend():
    return ToyQuadrantBackend()


@pytest.fixture()
def planted_image():
    """64x64 flat 0.2 background with a bright unit square inside the
    top-left quadrant; quadrant gray means are exactly (0.4, 0.2, 0.2, 0.2)."""
    data = np.full((64, 64, 3), 0.2)
    data[8:24, 8:24] = 1.0
    return ImageTensor(data)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
