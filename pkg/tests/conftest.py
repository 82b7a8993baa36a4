"""Shared fixtures for bornlab tests."""

from functools import reduce

import numpy as np
import pytest

from bornlab.config.settings import Settings
from bornlab.services.fourier_service import FourierService
from bornlab.services.hamiltonian_service import HamiltonianService
from bornlab.services.loss_service import LossService
from bornlab.services.pauli_algebra_service import PauliAlgebraService
from bornlab.services.statevector_service import StatevectorService
from bornlab.services.surrogate_service import SurrogateService
from bornlab.services.training_service import TrainingService
from bornlab.services.variance_service import VarianceService


@pytest.fixture
def settings():
    return Settings()


@pytest.fixture
def pauli_algebra():
    return PauliAlgebraService()


@pytest.fixture
def statevector(settings):
    return StatevectorService(settings)


@pytest.fixture
def fourier():
    return FourierService()


@pytest.fixture
def hamiltonians(settings):
    return HamiltonianService(settings)


@pytest.fixture
def surrogates(settings):
    return SurrogateService(settings)


@pytest.fixture
def variance(settings):
    return VarianceService(settings)


@pytest.fixture
def losses(settings):
    return LossService(settings)


@pytest.fixture
def training(settings):
    return TrainingService(settings)


@pytest.fixture
def ghz3(statevector):
    return statevector.simulate(statevector.ghz_circuit(3))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_distribution(rng, n):
    weights = rng.random(1 << n)
    return weights / weights.sum()


PAULI_MATRICES = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def dense_pauli(label):
    return reduce(np.kron, [PAULI_MATRICES[letter] for letter in label])
