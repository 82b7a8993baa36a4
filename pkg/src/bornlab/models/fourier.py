"""Correlator vectors, truncations and pseudo-distributions."""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional

import numpy as np

from ..errors import DimensionError, DomainError
from ..utils.bit_mapper import BitMapper

# SubsetIndex values are plain int bitmasks; see BitMapper for the bit layout.
SubsetIndex = int

K_ORDER = "k_order"
RFC = "rfc"
FULL = "full"


def subset_order(mask: SubsetIndex) -> int:
    return int(mask).bit_count()


@dataclass(frozen=True)
class CorrelatorVector:
    """Sparse map from subset masks to <Z_S> values, always holding the empty set."""

    n: int
    entries: Dict[SubsetIndex, float]

    def __post_init__(self):
        limit = 1 << self.n
        entries = {int(k): float(v) for k, v in self.entries.items()}
        for mask, value in entries.items():
            if not 0 <= mask < limit:
                raise DimensionError(f"Subset mask {mask} outside {self.n} qubits")
            if not np.isfinite(value):
                raise DomainError(f"Correlator for mask {mask} is not finite")
        if abs(entries.get(0, 1.0) - 1.0) > 1e-9:
            raise DomainError(f"Empty-set correlator must be 1, got {entries[0]}")
        entries[0] = 1.0
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_dense(cls, dense, masks: Optional[List[int]] = None) -> "CorrelatorVector":
        dense = np.asarray(dense, dtype=np.float64)
        n = int(dense.shape[0]).bit_length() - 1
        if masks is None:
            masks = range(dense.shape[0])
        return cls(n, {int(m): float(dense[m]) for m in masks})

    def __getitem__(self, mask: SubsetIndex) -> float:
        return self.entries[mask]

    def __contains__(self, mask: SubsetIndex) -> bool:
        return mask in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def to_dense(self) -> np.ndarray:
        """Values over all 2^n subsets, zero where absent."""
        dense = np.zeros(1 << self.n)
        for mask, value in self.entries.items():
            dense[mask] = value
        return dense

    def of_order(self, k: int) -> Dict[SubsetIndex, float]:
        return {m: v for m, v in self.entries.items() if subset_order(m) == k}


@dataclass(frozen=True)
class TruncationSpec:
    """Which correlators a reconstruction keeps."""

    kind: str
    k: Optional[int] = None
    omega: FrozenSet[SubsetIndex] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.kind == K_ORDER:
            if self.k is None or self.k < 0:
                raise DomainError(f"k-order truncation needs k >= 0, got {self.k}")
        elif self.kind == RFC:
            omega = frozenset(int(m) for m in self.omega) | {0}
            object.__setattr__(self, "omega", omega)
        elif self.kind != FULL:
            raise DomainError(f"Unknown truncation kind '{self.kind}'")

    @classmethod
    def k_order(cls, k: int) -> "TruncationSpec":
        return cls(K_ORDER, k=k)

    @classmethod
    def rfc(cls, omega) -> "TruncationSpec":
        return cls(RFC, omega=frozenset(omega))

    @classmethod
    def full(cls) -> "TruncationSpec":
        return cls(FULL)

    @property
    def is_full(self) -> bool:
        return self.kind == FULL

    def subsets(self, n: int) -> List[SubsetIndex]:
        """Kept subset masks sorted by (order, mask)."""
        if self.kind == FULL:
            return BitMapper.subsets_up_to(n, n)
        if self.kind == K_ORDER:
            return BitMapper.subsets_up_to(n, self.k)
        limit = 1 << n
        for mask in self.omega:
            if mask >= limit:
                raise DimensionError(f"Subset mask {mask} outside {n} qubits")
        return sorted(self.omega, key=lambda m: (subset_order(m), m))

    def size(self, n: int) -> int:
        return len(self.subsets(n))

    def describe(self) -> str:
        if self.kind == K_ORDER:
            return f"k_order(k={self.k})"
        if self.kind == RFC:
            return f"rfc(D={len(self.omega)})"
        return "full"


@dataclass(frozen=True, eq=False)
class PseudoDistribution:
    """Real vector over bitstrings summing to one; entries may be negative."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (1 << self.n,):
            raise DimensionError(f"Expected {1 << self.n} values for n={self.n}, got {values.shape}")
        total = float(values.sum())
        if abs(total - 1.0) > 1e-10:
            raise DomainError(f"Pseudo-distribution sums to {total}, not 1")
        object.__setattr__(self, "values", values)

    @property
    def min_value(self) -> float:
        return float(self.values.min())

    @property
    def is_proper(self) -> bool:
        """True when every entry is non-negative."""
        return self.min_value >= 0.0
