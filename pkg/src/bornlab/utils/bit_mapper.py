"""Bitstring and qubit-subset conversions.

Qubit q (0-based, qubit 0 printed leftmost) maps to bit position n - 1 - q of a
basis index, so index 0b100 with n=3 is the bitstring "100". Subset masks and
Pauli masks use the same convention.
"""

from functools import lru_cache
from itertools import combinations
from typing import Iterable, List, Sequence, Tuple

import numpy as np


class BitMapper:
    """Maps between basis indices, bit tuples, qubit sets and subset masks."""

    @staticmethod
    def popcount(values) -> np.ndarray:
        """Vectorized popcount of non-negative integers."""
        return np.bitwise_count(np.asarray(values, dtype=np.int64)).astype(np.int64)

    @staticmethod
    def parity_signs(n: int, mask: int) -> np.ndarray:
        """(-1)^{popcount(x & mask)} for every basis index x."""
        idx = BitMapper.basis_indices(n)
        return 1 - 2 * (np.bitwise_count(idx & mask) & 1).astype(np.int64)

    @staticmethod
    def basis_indices(n: int) -> np.ndarray:
        """Read-only array 0 .. 2^n - 1."""
        return _basis_indices(n)

    @staticmethod
    def qubits_to_mask(qubits: Iterable[int], n: int) -> int:
        """Subset mask for the given qubit indices."""
        mask = 0
        for q in qubits:
            if q < 0 or q >= n:
                raise ValueError(f"Qubit index {q} out of range for n={n}")
            mask |= 1 << (n - 1 - q)
        return mask

    @staticmethod
    def mask_to_qubits(mask: int, n: int) -> Tuple[int, ...]:
        """Qubit indices contained in a subset mask, ascending."""
        return tuple(q for q in range(n) if (mask >> (n - 1 - q)) & 1)

    @staticmethod
    def index_to_bits(index: int, n: int) -> Tuple[int, ...]:
        return tuple((index >> (n - 1 - q)) & 1 for q in range(n))

    @staticmethod
    def bits_to_index(bits: Sequence[int]) -> int:
        index = 0
        for bit in bits:
            index = (index << 1) | (int(bit) & 1)
        return index

    @staticmethod
    def format_bitstring(index: int, n: int) -> str:
        return format(index, f"0{n}b") if n > 0 else ""

    @staticmethod
    def bits_matrix(indices, n: int) -> np.ndarray:
        """Rows of bits (uint8) for an array of basis indices."""
        indices = np.asarray(indices, dtype=np.int64)
        shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
        return ((indices[:, None] >> shifts[None, :]) & 1).astype(np.uint8)

    @staticmethod
    def rows_to_indices(rows) -> np.ndarray:
        """Basis indices for a 2-D array of bit rows."""
        rows = np.asarray(rows, dtype=np.int64)
        if rows.ndim != 2:
            raise ValueError(f"Expected a 2-D bit matrix, got shape {rows.shape}")
        n = rows.shape[1]
        weights = np.left_shift(1, np.arange(n - 1, -1, -1, dtype=np.int64))
        return rows @ weights

    @staticmethod
    def subsets_of_order(n: int, k: int) -> List[int]:
        """Masks of all subsets with exactly k qubits, ascending."""
        if k < 0 or k > n:
            return []
        return sorted(BitMapper.qubits_to_mask(c, n) for c in combinations(range(n), k))

    @staticmethod
    def subsets_up_to(n: int, k: int) -> List[int]:
        """Masks of all subsets of order <= k, sorted by (order, mask)."""
        masks: List[int] = []
        for order in range(0, min(k, n) + 1):
            masks.extend(BitMapper.subsets_of_order(n, order))
        return masks

    @staticmethod
    def window_masks(n: int, m: int) -> List[int]:
        """Masks of the n - m + 1 contiguous windows of length m."""
        return [BitMapper.qubits_to_mask(range(i, i + m), n) for i in range(n - m + 1)]


@lru_cache(maxsize=32)
def _basis_indices(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    idx.setflags(write=False)
    return idx
