"""Dense statevector simulation of parameterized circuits."""

import logging
from typing import Iterable, List, Optional, Sequence

import numpy as np

from ..config.settings import Settings, get_settings
from ..errors import DomainError, ParameterCountError, ResourceLimitError
from ..models.circuit import CNOT, HADAMARD, PAULI_ROTATION, UNITARY, AnsatzSpec, Circuit, Gate, StateVector
from ..models.pauli import PauliString
from ..utils.bit_mapper import BitMapper
from .pauli_algebra_service import PauliAlgebraService

_I_POWERS = (1.0 + 0j, 1j, -1.0 + 0j, -1j)
HADAMARD_MATRIX = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)


class StatevectorService:
    """Exact simulation, Born probabilities, correlators and sampling."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()
        self.logger = logging.getLogger(__name__)
        self.pauli_algebra = PauliAlgebraService()

    def zero_state(self, n: int) -> StateVector:
        amplitudes = np.zeros(1 << n, dtype=np.complex128)
        amplitudes[0] = 1.0
        return StateVector(n, amplitudes)

    def simulate(self, circuit: Circuit, theta: Optional[Sequence[float]] = None) -> StateVector:
        """Apply the circuit to |0...0>."""
        psi = self.simulate_amplitudes(circuit, theta)
        return StateVector(circuit.n, psi)

    def simulate_amplitudes(self, circuit: Circuit, theta: Optional[Sequence[float]] = None) -> np.ndarray:
        """Raw amplitude array of simulate(), without wrapping."""
        theta = self._check_theta(circuit, theta)
        if circuit.n > self.settings.max_dense_qubits:
            raise ResourceLimitError(
                f"Dense simulation capped at {self.settings.max_dense_qubits} qubits, circuit has {circuit.n}"
            )
        psi = np.zeros(1 << circuit.n, dtype=np.complex128)
        psi[0] = 1.0
        for gate in circuit.gates:
            psi = self.apply_gate(psi, gate, theta, circuit.n)
        return psi

    def apply_gate(self, psi: np.ndarray, gate: Gate, theta: np.ndarray, n: int) -> np.ndarray:
        if gate.kind == PAULI_ROTATION:
            angle = theta[gate.param_index]
            return np.cos(angle / 2) * psi - 1j * np.sin(angle / 2) * self.apply_pauli(psi, gate.generator)
        if gate.kind == HADAMARD:
            return self._apply_single(psi, HADAMARD_MATRIX, gate.qubits[0], n)
        if gate.kind == UNITARY:
            return self._apply_single(psi, gate.matrix, gate.qubits[0], n)
        if gate.kind == CNOT:
            return self._apply_cnot(psi, gate.qubits[0], gate.qubits[1], n)
        raise DomainError(f"Unsupported gate kind '{gate.kind}'")

    def apply_pauli(self, psi: np.ndarray, pauli: PauliString) -> np.ndarray:
        """P|psi>, using P|b> = i^{phase + |x&z|} (-1)^{|b&z|} |b^x>."""
        idx = BitMapper.basis_indices(pauli.n)
        source = idx ^ pauli.x_mask
        signs = 1 - 2 * (np.bitwise_count(source & pauli.z_mask) & 1).astype(np.float64)
        coefficient = _I_POWERS[(pauli.phase + (pauli.x_mask & pauli.z_mask).bit_count()) % 4]
        return coefficient * signs * psi[source]

    def _apply_single(self, psi: np.ndarray, matrix: np.ndarray, qubit: int, n: int) -> np.ndarray:
        view = psi.reshape(1 << qubit, 2, 1 << (n - qubit - 1))
        return np.einsum("ab,ibj->iaj", matrix, view).reshape(-1)

    def _apply_cnot(self, psi: np.ndarray, control: int, target: int, n: int) -> np.ndarray:
        tensor = psi.reshape([2] * n).copy()
        selector = [slice(None)] * n
        selector[control] = 1
        target_axis = target if target < control else target - 1
        tensor[tuple(selector)] = np.flip(tensor[tuple(selector)], axis=target_axis)
        return tensor.reshape(-1)

    def born_distribution(self, state: StateVector) -> np.ndarray:
        probabilities = np.abs(state.amplitudes) ** 2
        return probabilities / probabilities.sum()

    def z_correlator(self, state: StateVector, qubits: Iterable[int]) -> float:
        """<Z_S> for the qubit set S; the empty set gives 1."""
        mask = BitMapper.qubits_to_mask(qubits, state.n)
        return self.z_correlator_mask(state, mask)

    def z_correlator_mask(self, state: StateVector, mask: int) -> float:
        probabilities = self.born_distribution(state)
        return float(BitMapper.parity_signs(state.n, mask) @ probabilities)

    def expectation(self, state: StateVector, pauli: PauliString) -> float:
        """Real part of <psi|P|psi>."""
        return float(np.vdot(state.amplitudes, self.apply_pauli(state.amplitudes, pauli)).real)

    def sample(self, state: StateVector, m: int, seed: int) -> np.ndarray:
        """m i.i.d. bitstrings as an (m, n) uint8 array."""
        if m < 1:
            raise DomainError(f"Sample count must be >= 1, got {m}")
        rng = np.random.default_rng(seed)
        indices = rng.choice(1 << state.n, size=m, p=self.born_distribution(state))
        return BitMapper.bits_matrix(indices, state.n)

    def build_ansatz(self, spec: AnsatzSpec) -> Circuit:
        """Construct the circuit family member described by spec."""
        rng = np.random.default_rng(spec.seed)
        if spec.kind == "iqp":
            return self._build_iqp(spec, rng)
        if spec.kind == "matchcircuit":
            pool = self.pauli_algebra.matchgate_generators(spec.n)
            return self._build_sampled(spec, pool, rng, "matchcircuit")
        if spec.kind == "dla_sampled":
            pool = sorted(spec.algebra.basis)
            if spec.algebra.n != spec.n:
                raise DomainError(f"Algebra acts on {spec.algebra.n} qubits, ansatz on {spec.n}")
            return self._build_sampled(spec, pool, rng, "dla_sampled")
        return self._build_strongly_entangling(spec)

    def _build_iqp(self, spec: AnsatzSpec, rng: np.random.Generator) -> Circuit:
        n = spec.n
        arity_counts = spec.arity_counts
        if arity_counts is None:
            arity_counts = {1: min(n, spec.gate_count), 2: max(spec.gate_count - n, 0)}
        generators: List[PauliString] = []
        for arity in sorted(arity_counts):
            count = int(arity_counts[arity])
            if count == 0:
                continue
            if not 1 <= arity <= n:
                raise DomainError(f"IQP generator arity {arity} outside [1, {n}]")
            if arity == 1 and count <= n:
                chosen = [(q,) for q in range(count)]
            else:
                chosen = [tuple(sorted(rng.choice(n, size=arity, replace=False))) for _ in range(count)]
            for qubits in chosen:
                generators.append(PauliString.from_sites(n, {int(q): "Z" for q in qubits}))
        gates = [Gate.hadamard(q) for q in range(n)]
        gates += [Gate.rotation(g, j) for j, g in enumerate(generators)]
        gates += [Gate.hadamard(q) for q in range(n)]
        metadata = {"kind": "iqp", "arity_counts": {int(a): int(c) for a, c in arity_counts.items()}, "seed": spec.seed}
        return Circuit(n, gates, len(generators), metadata)

    def _build_sampled(self, spec: AnsatzSpec, pool: List[PauliString], rng, kind: str) -> Circuit:
        if not pool:
            raise DomainError(f"No generators available for {kind} ansatz")
        picks = rng.integers(0, len(pool), size=spec.gate_count)
        gates = [Gate.rotation(pool[int(p)], j) for j, p in enumerate(picks)]
        return Circuit(spec.n, gates, spec.gate_count, {"kind": kind, "seed": spec.seed})

    def _build_strongly_entangling(self, spec: AnsatzSpec) -> Circuit:
        """Rot = RZ RY RZ on every qubit, then a CNOT ring with layer-dependent range."""
        n = spec.n
        gates: List[Gate] = []
        param = 0
        for layer in range(spec.layers):
            for q in range(n):
                for letter in "ZYZ":
                    gates.append(Gate.rotation(PauliString.single(n, letter, q), param))
                    param += 1
            if n > 1:
                reach = layer % (n - 1) + 1
                for q in range(n):
                    gates.append(Gate.cnot(q, (q + reach) % n))
        return Circuit(n, gates, param, {"kind": "strongly_entangling", "layers": spec.layers})

    def ghz_circuit(self, n: int) -> Circuit:
        gates = [Gate.hadamard(0)] + [Gate.cnot(q, q + 1) for q in range(n - 1)]
        return Circuit(n, gates, 0, {"kind": "ghz"})

    def two_qubit_example_circuit(self) -> Circuit:
        """RY(theta_0) (x) RY(theta_1), CNOT 0->1, CNOT 1->0."""
        gates = [
            Gate.rotation(PauliString.from_label("YI"), 0),
            Gate.rotation(PauliString.from_label("IY"), 1),
            Gate.cnot(0, 1),
            Gate.cnot(1, 0),
        ]
        return Circuit(2, gates, 2, {"kind": "two_qubit_example"})

    def _check_theta(self, circuit: Circuit, theta) -> np.ndarray:
        theta = np.zeros(0) if theta is None else np.asarray(theta, dtype=np.float64).reshape(-1)
        if theta.shape[0] != circuit.param_count:
            raise ParameterCountError(
                f"Circuit expects {circuit.param_count} parameters, got {theta.shape[0]}"
            )
        return theta
