import numpy as np
import pytest

from qcse import kernels


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def available_backends():
    names = ["python"]
    try:
        kernels.backend_module("compiled")
        names.append("compiled")
    except ImportError:
        pass
    return names


@pytest.fixture(params=available_backends())
def backend(request):
    return kernels.backend_module(request.param)
