import numpy as np
import pytest

from kostlan.polymodel import ComplexGaussianStream


@pytest.fixture
def stream():
    return ComplexGaussianStream(20260809, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
