import numpy as np
import pytest

from app.models.schemas import PropagatorConfig
from app.services.odat_transform import build_plan

DEFAULT_FS = 16000.0
DEFAULT_N = 256


@pytest.fixture(scope="session")
def default_plan():
    return build_plan(DEFAULT_N, DEFAULT_FS, PropagatorConfig(sigma1=0.6, sigma2=0.04))


@pytest.fixture(scope="session")
def identity_plan():
    return build_plan(DEFAULT_N, DEFAULT_FS, PropagatorConfig(sigma1=0.0, sigma2=0.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)
