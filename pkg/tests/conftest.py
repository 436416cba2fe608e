import pytest

from qsdsim import (Configuration, LogisticModel, RandomStream, UniformKernel,
                    UniformModel)
from qsdsim.oracle import build_mass_chain, principal_left_eigenpair
from qsdsim.qsd import fleming_viot_estimate


@pytest.fixture(scope="session")
def uniform_model():
    return UniformModel(lam=2.0, b=1.0, rho=0.3, kernel=UniformKernel())


@pytest.fixture(scope="session")
def logistic_model():
    return LogisticModel(b=1.0, rho=0.3, d=2.0, c=0.5, kernel=UniformKernel())


@pytest.fixture(scope="session")
def mass_five():
    return Configuration.from_pairs(((0.2, 2), (0.5, 2), (0.8, 1)))


@pytest.fixture(scope="session")
def oracle60(uniform_model):
    """Truncated mass chain at N=60 with its converged eigenpair."""
    chain = build_mass_chain(uniform_model, 60)
    return chain, principal_left_eigenpair(chain, tol=1e-10)


@pytest.fixture(scope="session")
def fv_estimate(uniform_model):
    """Full-scale interacting-particle estimate shared across criteria."""
    return fleming_viot_estimate(uniform_model, particles=2000, burn_in=20.0,
                                 horizon=120.0, rng=RandomStream(101))
