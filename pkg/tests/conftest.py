from hypothesis import settings

import pytest

from qfattack import SyntheticEncoder, SyntheticEncoderConfig

settings.register_profile("ci", deadline=None)
settings.load_profile("ci")


@pytest.fixture()
def backend():
    return SyntheticEncoder(SyntheticEncoderConfig(seed=0, dim=64))


@pytest.fixture()
def small_backend():
    return SyntheticEncoder(SyntheticEncoderConfig(seed=0, dim=8))
