import os

import pytest
from hypothesis import HealthCheck, settings

from catpulse.model import DeviceParams, PulseSpec

settings.register_profile(
    "default", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def params():
    return DeviceParams()


@pytest.fixture
def pulse():
    return PulseSpec()


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    return request.param
