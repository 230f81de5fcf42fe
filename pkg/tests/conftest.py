import numpy as np
import pytest

from kmtheta.lattice import OLattice
from kmtheta.numberfield import TotallyRealField
from kmtheta.perioddomain import make_period_point
from kmtheta.quadspace import QuadraticSpace


@pytest.fixture(scope="session")
def Q():
    return TotallyRealField.rationals()


@pytest.fixture(scope="session")
def K5():
    return TotallyRealField.quadratic(5)


@pytest.fixture(scope="session")
def sig12(Q):
    return QuadraticSpace.from_entries(Q, [[2, 0, 0], [0, -2, 0], [0, 0, -2]], 1)


@pytest.fixture(scope="session")
def sig22(Q):
    return QuadraticSpace.from_entries(Q, [[2, 0, 0, 0], [0, 2, 0, 0], [0, 0, -2, 0], [0, 0, 0, -2]], 1)


@pytest.fixture(scope="session")
def mixed5(K5):
    """diag(2, 2(2 - sqrt5), 2(2 - sqrt5)): signature (1,2) at place 1, (3,0) at place 2."""
    c = 2 * (2 - K5.sqrt_d)
    return QuadraticSpace.from_entries(K5, [[2, 0, 0], [0, c, 0], [0, 0, c]], 1)


@pytest.fixture(scope="session")
def tau0(sig12):
    return make_period_point(sig12, 1, [0, 1, 0], [0, 0, 1])


@pytest.fixture(scope="session")
def Z3(sig12):
    return OLattice.standard(sig12)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
