"""Pauli strings and Pauli-basis operator algebras."""

from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Tuple

from ..errors import DimensionError

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {bits: letter for letter, bits in _LETTER_BITS.items()}
_PHASE_TEXT = {0: "", 1: "i", 2: "-", 3: "-i"}


@dataclass(frozen=True, order=True)
class PauliString:
    """n-qubit Pauli word i^phase * sigma(x_0, z_0) (x) ... (x) sigma(x_{n-1}, z_{n-1}).

    sigma(1, 1) is Y. Qubit q lives at bit n - 1 - q of both masks. ``phase`` is
    the exponent k of i^k, reduced mod 4.
    """

    n: int
    x_mask: int
    z_mask: int
    phase: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise DimensionError(f"Qubit count must be non-negative, got {self.n}")
        limit = 1 << self.n
        if not (0 <= self.x_mask < limit and 0 <= self.z_mask < limit):
            raise DimensionError(
                f"Masks x={self.x_mask:#x} z={self.z_mask:#x} have bits outside {self.n} qubits"
            )
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n, 0, 0, 0)

    @classmethod
    def from_label(cls, label: str, phase: int = 0) -> "PauliString":
        """Parse a label such as "XZIY"; character 0 is qubit 0."""
        n = len(label)
        x_mask = z_mask = 0
        for q, letter in enumerate(label.upper()):
            if letter not in _LETTER_BITS:
                raise ValueError(f"Invalid Pauli letter '{letter}' in label '{label}'")
            x_bit, z_bit = _LETTER_BITS[letter]
            shift = n - 1 - q
            x_mask |= x_bit << shift
            z_mask |= z_bit << shift
        return cls(n, x_mask, z_mask, phase)

    @classmethod
    def single(cls, n: int, letter: str, qubit: int) -> "PauliString":
        """One non-identity letter on ``qubit``."""
        return cls.from_sites(n, {qubit: letter})

    @classmethod
    def from_sites(cls, n: int, sites: dict) -> "PauliString":
        """Build from a {qubit: letter} map."""
        letters = ["I"] * n
        for q, letter in sites.items():
            if q < 0 or q >= n:
                raise DimensionError(f"Qubit index {q} out of range for n={n}")
            letters[q] = letter
        return cls.from_label("".join(letters))

    @property
    def label(self) -> str:
        """Letters without phase, qubit 0 first."""
        letters = []
        for q in range(self.n):
            shift = self.n - 1 - q
            letters.append(_BITS_LETTER[((self.x_mask >> shift) & 1, (self.z_mask >> shift) & 1)])
        return "".join(letters)

    @property
    def coefficient(self) -> complex:
        return (1, 1j, -1, -1j)[self.phase]

    @property
    def support(self) -> int:
        return self.x_mask | self.z_mask

    @property
    def weight(self) -> int:
        return self.support.bit_count()

    @property
    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    @property
    def is_diagonal(self) -> bool:
        return self.x_mask == 0

    @property
    def key(self) -> Tuple[int, int]:
        """Phase-free identity of the string."""
        return (self.x_mask, self.z_mask)

    def canonical(self) -> "PauliString":
        """Same letters with phase +1."""
        if self.phase == 0:
            return self
        return PauliString(self.n, self.x_mask, self.z_mask, 0)

    def with_phase(self, phase: int) -> "PauliString":
        return PauliString(self.n, self.x_mask, self.z_mask, phase)

    def commutes_with(self, other: "PauliString") -> bool:
        """True when the symplectic form of the two strings is even."""
        if self.n != other.n:
            raise DimensionError(f"Pauli strings act on {self.n} and {other.n} qubits")
        overlap = (self.x_mask & other.z_mask).bit_count() + (self.z_mask & other.x_mask).bit_count()
        return overlap % 2 == 0

    def __str__(self) -> str:
        return f"{_PHASE_TEXT[self.phase]}{self.label}"


@dataclass(frozen=True)
class OperatorAlgebra:
    """Real span of phase-stripped Pauli strings."""

    n: int
    basis: FrozenSet[PauliString]
    provenance: Tuple[PauliString, ...] = field(default=())

    def __post_init__(self):
        for element in self.basis:
            if element.n != self.n:
                raise DimensionError(f"Basis element {element} does not act on {self.n} qubits")
            if element.phase != 0:
                raise ValueError(f"Basis element {element} must be stored without phase")

    @classmethod
    def from_strings(
        cls, n: int, strings: Iterable[PauliString], provenance: Iterable[PauliString] = ()
    ) -> "OperatorAlgebra":
        return cls(n, frozenset(s.canonical() for s in strings), tuple(provenance))

    @classmethod
    def from_labels(cls, labels: Iterable[str]) -> "OperatorAlgebra":
        strings = [PauliString.from_label(label) for label in labels]
        if not strings:
            raise ValueError("At least one label is required to infer n")
        return cls.from_strings(strings[0].n, strings)

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def __len__(self) -> int:
        return len(self.basis)

    def __contains__(self, item: PauliString) -> bool:
        return item.canonical() in self.basis

    def labels(self) -> List[str]:
        return sorted(p.label for p in self.basis)

    def to_text(self) -> str:
        """Newline-delimited sorted labels."""
        return "\n".join(self.labels())

    def is_closed(self) -> bool:
        """Check that every commutator of two basis elements stays in the span."""
        elements = list(self.basis)
        for i, a in enumerate(elements):
            for b in elements[i + 1 :]:
                if not a.commutes_with(b):
                    x_mask = a.x_mask ^ b.x_mask
                    z_mask = a.z_mask ^ b.z_mask
                    if PauliString(self.n, x_mask, z_mask) not in self.basis:
                        return False
        return True
