import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("islab", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("islab")

SEEDS = (0, 1, 2)


@pytest.fixture(params=SEEDS)
def seed(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
