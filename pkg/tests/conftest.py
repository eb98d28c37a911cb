import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from wassproj import datagen
from wassproj.distributions import encode_many
from wassproj.spline_basis import SplineBasis


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def basis20():
    return SplineBasis(20)


@pytest.fixture(scope="session")
def gaussian_mix_100(basis20):
    return encode_many(datagen.gen_gaussian_mix(100, seed=0), basis20)


@pytest.fixture(scope="session")
def dpm_desk():
    """DPM instance used for the geodesic comparisons: n=30, J=10, seed 3."""
    basis = SplineBasis(10)
    return encode_many(datagen.gen_dpm(30, 10, seed=3), basis)


def random_monotone(rng, J, scale=1.0):
    return np.cumsum(np.abs(rng.standard_normal(J))) * scale + rng.standard_normal()
