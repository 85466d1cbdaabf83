import numpy as np
import pytest

from quadtherm._backend import available


@pytest.fixture(params=sorted(available()))
def backend(request):
    return available()[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
