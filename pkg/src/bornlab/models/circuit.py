"""Circuits, gates and dense states."""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from ..errors import DimensionError, DomainError
from .pauli import OperatorAlgebra, PauliString

PAULI_ROTATION = "pauli_rotation"
HADAMARD = "hadamard"
CNOT = "cnot"
UNITARY = "unitary"

ANSATZ_KINDS = ("iqp", "matchcircuit", "dla_sampled", "strongly_entangling")


@dataclass(frozen=True, eq=False)
class Gate:
    """A circuit instruction.

    Rotations implement R_P(theta) = exp(-i theta/2 P) with theta = params[param_index].
    """

    kind: str
    qubits: Tuple[int, ...] = ()
    generator: Optional[PauliString] = None
    param_index: Optional[int] = None
    matrix: Optional[np.ndarray] = None

    @classmethod
    def rotation(cls, generator: PauliString, param_index: int) -> "Gate":
        if generator.phase not in (0, 2):
            raise DomainError(f"Rotation generator {generator} is not Hermitian")
        if generator.is_identity:
            raise DomainError("Rotation generator must not be the identity")
        return cls(PAULI_ROTATION, (), generator, param_index)

    @classmethod
    def hadamard(cls, qubit: int) -> "Gate":
        return cls(HADAMARD, (qubit,))

    @classmethod
    def cnot(cls, control: int, target: int) -> "Gate":
        if control == target:
            raise DomainError(f"CNOT control and target coincide on qubit {control}")
        return cls(CNOT, (control, target))

    @classmethod
    def single_qubit_unitary(cls, qubit: int, matrix: np.ndarray) -> "Gate":
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.shape != (2, 2):
            raise DimensionError(f"Single-qubit unitary must be 2x2, got {matrix.shape}")
        return cls(UNITARY, (qubit,), None, None, matrix)

    @property
    def is_rotation(self) -> bool:
        return self.kind == PAULI_ROTATION

    @property
    def is_clifford(self) -> bool:
        return self.kind in (HADAMARD, CNOT)


@dataclass(frozen=True, eq=False)
class Circuit:
    """Ordered gate list acting on |0...0>."""

    n: int
    gates: Tuple[Gate, ...]
    param_count: int
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for position, gate in enumerate(self.gates):
            if gate.is_rotation:
                if gate.generator.n != self.n:
                    raise DimensionError(
                        f"Gate {position}: generator acts on {gate.generator.n} qubits, circuit has {self.n}"
                    )
                if gate.param_index is None or not 0 <= gate.param_index < self.param_count:
                    raise DimensionError(
                        f"Gate {position}: parameter index {gate.param_index} outside [0, {self.param_count})"
                    )
            for q in gate.qubits:
                if not 0 <= q < self.n:
                    raise DimensionError(f"Gate {position}: qubit {q} outside [0, {self.n})")

    def rotations(self) -> Tuple[Gate, ...]:
        return tuple(g for g in self.gates if g.is_rotation)

    def parameter_usage(self) -> Dict[int, int]:
        """Number of rotation gates reading each parameter."""
        usage: Dict[int, int] = {}
        for gate in self.rotations():
            usage[gate.param_index] = usage.get(gate.param_index, 0) + 1
        return usage

    @property
    def shared_parameters(self) -> Tuple[int, ...]:
        return tuple(sorted(j for j, count in self.parameter_usage().items() if count > 1))

    def first_generator(self, param_index: int) -> Optional[PauliString]:
        for gate in self.rotations():
            if gate.param_index == param_index:
                return gate.generator
        return None


@dataclass(frozen=True)
class AnsatzSpec:
    """Recipe for a parameterized circuit family.

    ``arity_counts`` maps Z-generator arity to gate count for iqp circuits
    (default: all singles plus seeded pairs). ``algebra`` feeds dla_sampled.
    """

    kind: str
    n: int
    gate_count: int = 0
    layers: int = 1
    seed: int = 0
    arity_counts: Optional[Dict[int, int]] = None
    algebra: Optional[OperatorAlgebra] = None

    def __post_init__(self):
        if self.kind not in ANSATZ_KINDS:
            raise DomainError(f"Unknown ansatz kind '{self.kind}', expected one of {ANSATZ_KINDS}")
        if self.n < 1:
            raise DomainError(f"Ansatz needs at least one qubit, got n={self.n}")
        if self.gate_count < 0 or self.layers < 0:
            raise DomainError(f"Gate count and layers must be non-negative, got {self.gate_count}, {self.layers}")
        if self.kind == "matchcircuit" and self.n < 2:
            raise DomainError("Matchcircuits need n >= 2")
        if self.kind == "dla_sampled" and self.algebra is None:
            raise DomainError("dla_sampled ansatz requires an algebra")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Dense normalized state over 2^n basis states."""

    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if amplitudes.shape != (1 << self.n,):
            raise DimensionError(f"Expected {1 << self.n} amplitudes for n={self.n}, got {amplitudes.shape}")
        norm = float(np.vdot(amplitudes, amplitudes).real)
        if abs(norm - 1.0) > 1e-10:
            raise DomainError(f"State is not normalized, norm^2 = {norm}")
        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def dimension(self) -> int:
        return 1 << self.n
