import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_state(space, rng):
    from ionphonon.fock import StateVector

    v = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    return StateVector.from_amplitudes(space, v)
