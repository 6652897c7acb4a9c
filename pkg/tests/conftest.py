import numpy as np
import pytest

from wickllt.basis import ChaosVector, GaussianSpace


@pytest.fixture(scope="session")
def line16():
    return GaussianSpace(1, 16)


@pytest.fixture(scope="session")
def line20():
    return GaussianSpace(1, 20)


@pytest.fixture(scope="session")
def plane8():
    return GaussianSpace(2, 8)


@pytest.fixture(scope="session")
def plane12():
    return GaussianSpace(2, 12)


def unit_density(space: GaussianSpace) -> ChaosVector:
    c = np.zeros(space.size)
    c[0] = 1.0
    return ChaosVector(space, c)


def random_low_degree(space: GaussianSpace, rng, max_degree: int = 4, scale: float = 0.3) -> ChaosVector:
    coeffs = np.where(space.degrees <= max_degree, scale * rng.standard_normal(space.size), 0.0)
    return ChaosVector(space, coeffs)
