import numpy as np
import pytest

from lyapsim import preset_5dim


@pytest.fixture(scope="session")
def sys5():
    return preset_5dim()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
