import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cuntzframe.serialize import load_fixture

settings.register_profile("pkg", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("pkg")


@pytest.fixture(scope="session")
def fixture():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = load_fixture(name)
        return cache[name]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
