import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ptflearn.dist import ProductDistribution

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def random_mu(n, c, rng):
    """Means drawn uniformly from [-(1-c), 1-c]."""
    return ProductDistribution(tuple(rng.uniform(-(1 - c), 1 - c, size=n)))


def random_sign_table(n, rng):
    return rng.choice([-1.0, 1.0], size=1 << n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
