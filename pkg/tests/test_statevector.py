import numpy as np
import pytest

from bornlab.config.settings import Settings
from bornlab.errors import DomainError, ParameterCountError, ResourceLimitError
from bornlab.models.circuit import AnsatzSpec, Circuit, Gate
from bornlab.models.pauli import PauliString
from bornlab.services.statevector_service import StatevectorService

from .conftest import dense_pauli


def test_ghz_amplitudes_and_correlators(statevector, ghz3):
    expected = np.zeros(8)
    expected[0] = expected[7] = 1 / np.sqrt(2)
    np.testing.assert_allclose(ghz3.amplitudes, expected, atol=1e-12)
    assert statevector.z_correlator(ghz3, []) == pytest.approx(1.0)
    for q in range(3):
        assert statevector.z_correlator(ghz3, [q]) == pytest.approx(0.0, abs=1e-12)
    for pair in ([0, 1], [0, 2], [1, 2]):
        assert statevector.z_correlator(ghz3, pair) == pytest.approx(1.0)
    assert statevector.z_correlator(ghz3, [0, 1, 2]) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("theta", [(0.3, 1.1), (2.0, -0.7), (np.pi / 2, np.pi / 3)])
def test_two_qubit_example_correlators(statevector, theta):
    state = statevector.simulate(statevector.two_qubit_example_circuit(), theta)
    a, b = theta
    assert statevector.z_correlator(state, [0]) == pytest.approx(np.cos(b))
    assert statevector.z_correlator(state, [1]) == pytest.approx(np.cos(a) * np.cos(b))
    assert statevector.z_correlator(state, [0, 1]) == pytest.approx(np.cos(a))


def test_apply_pauli_y_on_zero(statevector):
    result = statevector.apply_pauli(np.array([1.0, 0.0], dtype=np.complex128), PauliString.from_label("Y"))
    np.testing.assert_allclose(result, [0.0, 1j])


@pytest.mark.parametrize("label", ["XYZ", "YYI", "ZIX", "IYI"])
def test_apply_pauli_matches_dense_matrix(statevector, rng, label):
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    np.testing.assert_allclose(
        statevector.apply_pauli(psi, PauliString.from_label(label)), dense_pauli(label) @ psi, atol=1e-12
    )


def test_rotation_follows_half_angle_convention(statevector):
    circuit = Circuit(1, [Gate.rotation(PauliString.from_label("X"), 0)], 1)
    state = statevector.simulate(circuit, [0.8])
    np.testing.assert_allclose(state.amplitudes, [np.cos(0.4), -1j * np.sin(0.4)], atol=1e-12)
    assert statevector.z_correlator(state, [0]) == pytest.approx(np.cos(0.8))


def test_expectation_of_pauli(statevector):
    circuit = Circuit(1, [Gate.rotation(PauliString.from_label("Y"), 0)], 1)
    state = statevector.simulate(circuit, [0.6])
    assert statevector.expectation(state, PauliString.from_label("X")) == pytest.approx(np.sin(0.6))


def test_cnot_orientation(statevector):
    circuit = Circuit(2, [Gate.rotation(PauliString.from_label("XI"), 0), Gate.cnot(0, 1)], 1)
    probabilities = statevector.born_distribution(statevector.simulate(circuit, [np.pi]))
    np.testing.assert_allclose(probabilities, [0.0, 0.0, 0.0, 1.0], atol=1e-12)


def test_parameter_count_mismatch(statevector):
    with pytest.raises(ParameterCountError):
        statevector.simulate(statevector.two_qubit_example_circuit(), [0.1])


def test_dense_qubit_cap():
    service = StatevectorService(Settings(max_dense_qubits=3))
    with pytest.raises(ResourceLimitError):
        service.simulate(service.ghz_circuit(4))


def test_sampling_is_seeded_and_follows_support(statevector, ghz3):
    first = statevector.sample(ghz3, 200, seed=5)
    second = statevector.sample(ghz3, 200, seed=5)
    assert first.shape == (200, 3)
    np.testing.assert_array_equal(first, second)
    assert set(map(tuple, first.tolist())) <= {(0, 0, 0), (1, 1, 1)}
    with pytest.raises(DomainError):
        statevector.sample(ghz3, 0, seed=5)


def test_iqp_ansatz_layout(statevector):
    circuit = statevector.build_ansatz(AnsatzSpec("iqp", 4, gate_count=6, seed=3))
    assert circuit.param_count == 6
    assert [g.kind for g in circuit.gates[:4]] == ["hadamard"] * 4
    assert [g.kind for g in circuit.gates[-4:]] == ["hadamard"] * 4
    generators = [g.generator for g in circuit.rotations()]
    assert all(g.x_mask == 0 for g in generators)
    assert sum(1 for g in generators if g.weight == 1) == 4
    assert sum(1 for g in generators if g.weight == 2) == 2


def test_strongly_entangling_parameter_count(statevector):
    circuit = statevector.build_ansatz(AnsatzSpec("strongly_entangling", 3, layers=2))
    assert circuit.param_count == 18
    state = statevector.simulate(circuit, np.linspace(0.0, 1.0, 18))
    assert np.vdot(state.amplitudes, state.amplitudes).real == pytest.approx(1.0)


def test_matchcircuit_uses_matchgate_generators(statevector, pauli_algebra):
    circuit = statevector.build_ansatz(AnsatzSpec("matchcircuit", 4, gate_count=10, seed=1))
    pool = set(pauli_algebra.matchgate_generators(4))
    assert all(g.generator in pool for g in circuit.rotations())
