import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from uavbackhaul.params import default_params

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def table3():
    """Default scenario (h_u = 100 m, 10 UAVs, 10 BS/km^2)."""
    return default_params()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
