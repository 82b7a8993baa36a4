"""Hamiltonians, lattices, ground states and binary datasets."""

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from ..errors import DatasetError, DimensionError, DomainError
from ..utils.bit_mapper import BitMapper
from .circuit import StateVector
from .pauli import PauliString

MODEL_KINDS = ("tfim", "heisenberg_alt", "haldane_1d", "haldane_2d")


@dataclass(frozen=True)
class LatticeSpec:
    """Open chain or an nx-by-ny grid periodic along y.

    Site (x, y) of the grid is qubit x * ny + y.
    """

    kind: str
    nx: int
    ny: int = 1

    def __post_init__(self):
        if self.kind == "chain":
            if self.ny != 1 or self.nx < 1:
                raise DomainError(f"Chain lattice needs nx >= 1 and ny == 1, got ({self.nx}, {self.ny})")
        elif self.kind == "y_periodic":
            if self.nx < 1 or self.ny < 2:
                raise DomainError(f"y-periodic lattice needs nx >= 1 and ny >= 2, got ({self.nx}, {self.ny})")
        else:
            raise DomainError(f"Unknown lattice kind '{self.kind}'")

    @classmethod
    def chain(cls, n: int) -> "LatticeSpec":
        return cls("chain", n, 1)

    @classmethod
    def y_periodic(cls, nx: int, ny: int) -> "LatticeSpec":
        return cls("y_periodic", nx, ny)

    @property
    def n(self) -> int:
        return self.nx * self.ny

    def site(self, x: int, y: int) -> int:
        return x * self.ny + (y % self.ny)


@dataclass(frozen=True)
class HamiltonianModel:
    """Named model with its couplings."""

    kind: str
    n: int = 0
    nx: int = 0
    ny: int = 0
    J: float = 1.0
    h: float = 0.0
    J_even: float = 1.0
    J_odd: float = 1.0
    h1: float = 0.0
    h2: float = 0.0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise DomainError(f"Unknown model '{self.kind}', expected one of {MODEL_KINDS}")
        for name in ("J", "h", "J_even", "J_odd", "h1", "h2"):
            if not np.isfinite(getattr(self, name)):
                raise DomainError(f"Model parameter {name} must be finite")

    @classmethod
    def tfim(cls, n: int, J: float, h: float) -> "HamiltonianModel":
        return cls("tfim", n=n, J=J, h=h)

    @classmethod
    def heisenberg_alt(cls, n: int, J_even: float, J_odd: float) -> "HamiltonianModel":
        return cls("heisenberg_alt", n=n, J_even=J_even, J_odd=J_odd)

    @classmethod
    def haldane_1d(cls, n: int, J: float, h1: float, h2: float) -> "HamiltonianModel":
        return cls("haldane_1d", n=n, J=J, h1=h1, h2=h2)

    @classmethod
    def haldane_2d(cls, nx: int, ny: int, J: float, h1: float, h2: float) -> "HamiltonianModel":
        return cls("haldane_2d", n=nx * ny, nx=nx, ny=ny, J=J, h1=h1, h2=h2)

    def as_dict(self) -> Dict[str, object]:
        fields = {
            "tfim": ("n", "J", "h"),
            "heisenberg_alt": ("n", "J_even", "J_odd"),
            "haldane_1d": ("n", "J", "h1", "h2"),
            "haldane_2d": ("nx", "ny", "J", "h1", "h2"),
        }[self.kind]
        return {"kind": self.kind, **{name: getattr(self, name) for name in fields}}


@dataclass(frozen=True)
class Hamiltonian:
    """Real-weighted sum of Pauli strings."""

    n: int
    terms: Tuple[Tuple[float, PauliString], ...]
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((float(c), p) for c, p in self.terms))
        for coefficient, pauli in self.terms:
            if pauli.n != self.n:
                raise DimensionError(f"Term {pauli} acts on {pauli.n} qubits, Hamiltonian has {self.n}")
            if pauli.phase != 0:
                raise DomainError(f"Term {pauli} carries a phase; use a real coefficient instead")
            if not np.isfinite(coefficient):
                raise DomainError(f"Coefficient of {pauli} is not finite")

    def __len__(self) -> int:
        return len(self.terms)

    def labels(self) -> List[Tuple[float, str]]:
        return [(c, p.label) for c, p in self.terms]


@dataclass(frozen=True)
class GroundStateResult:
    energy: float
    state: StateVector
    degenerate: bool
    gap: float
    residual: float = 0.0
    method: str = "dense"


@dataclass(frozen=True, eq=False)
class BinaryDataset:
    """Rows of n-bit observations; column 0 is qubit 0."""

    n: int
    rows: np.ndarray
    columns: Tuple[str, ...] = ()

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.uint8)
        if rows.ndim != 2 or rows.shape[1] != self.n:
            raise DatasetError(f"Dataset rows must have {self.n} bits, got shape {rows.shape}")
        if rows.shape[0] == 0:
            raise DatasetError("Dataset has no rows")
        if np.any(rows > 1):
            raise DatasetError("Dataset contains non-binary values")
        object.__setattr__(self, "rows", rows)

    @property
    def size(self) -> int:
        return int(self.rows.shape[0])

    def indices(self) -> np.ndarray:
        return BitMapper.rows_to_indices(self.rows)

    def distribution(self) -> np.ndarray:
        """Normalized histogram over the 2^n bitstrings."""
        counts = np.bincount(self.indices(), minlength=1 << self.n).astype(np.float64)
        return counts / counts.sum()

    def select(self, columns: List[int]) -> "BinaryDataset":
        """Keep the given column positions, in order."""
        names = tuple(self.columns[c] for c in columns) if self.columns else ()
        return BinaryDataset(len(columns), self.rows[:, columns], names)
