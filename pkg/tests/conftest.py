import numpy as np
import pytest

from omnisim import build_layout, load_prototype


@pytest.fixture(scope="session")
def prototype():
    return load_prototype()


@pytest.fixture(scope="session")
def prototype_layout(prototype):
    return build_layout(prototype.panel)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
