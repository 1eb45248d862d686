import numpy as np
import pytest

from ess import materials


@pytest.fixture(scope="session")
def calcite():
    return materials.get_material("calcite")


@pytest.fixture(scope="session")
def ppln():
    return materials.get_material("ppln_mgo")


@pytest.fixture(scope="session")
def flat_material():
    """Dispersionless isotropic model, n = 1.5 on both axes."""
    return materials.SellmeierModel(
        "flat", "constant", {"o": {"n": 1.5}, "e": {"n": 1.5}}, (100.0, 5000.0))


@pytest.fixture(scope="session")
def uniaxial_flat_material():
    """Dispersionless birefringent model (n_o > n_e, calcite-like)."""
    return materials.SellmeierModel(
        "flatbiref", "constant", {"o": {"n": 1.66}, "e": {"n": 1.49}},
        (100.0, 5000.0))


def random_density_matrix(rng):
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = m @ m.conj().T
    return rho / np.trace(rho).real
