import math

import numpy as np
import pytest

from schottky_lab.schottky import SchottkyData, elementary_schottky, symmetric_schottky


@pytest.fixture(scope="session")
def elementary() -> SchottkyData:
    """Cyclic group of translation length 2; zeta zeros at i*pi*m."""
    return elementary_schottky(2.0)


@pytest.fixture(scope="session")
def symmetric() -> SchottkyData:
    """Four equally spaced disks, opposite ones paired."""
    return symmetric_schottky(2, math.pi / 4)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)
