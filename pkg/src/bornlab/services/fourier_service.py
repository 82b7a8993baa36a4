"""Correlator Fourier decomposition of Born distributions."""

import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DimensionError, DomainError, MissingCorrelatorError
from ..models.fourier import CorrelatorVector, PseudoDistribution, SubsetIndex, TruncationSpec
from ..utils.bit_mapper import BitMapper
from ..utils.walsh_transform import WalshTransform

ESTIMATOR_MODES = ("z_parity", "s_product")


class FourierService:
    """Walsh-Hadamard view of distributions: decompose, truncate, reconstruct, estimate."""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def decompose(self, p) -> CorrelatorVector:
        """All 2^n correlators <Z_S> of a probability vector."""
        p = self._check_distribution(p)
        dense = np.clip(WalshTransform.fwht(p), -1.0, 1.0)
        return CorrelatorVector.from_dense(dense)

    def decompose_dense(self, p) -> np.ndarray:
        """Correlators as a dense array indexed by subset mask; no validation."""
        return WalshTransform.fwht(np.asarray(p, dtype=np.float64))

    def reconstruct(self, c: CorrelatorVector, trunc: TruncationSpec) -> PseudoDistribution:
        """Pr(x) = 2^{-n} sum_{S in trunc} (-1)^{|x & S|} c(S)."""
        masks = trunc.subsets(c.n)
        dense = np.zeros(1 << c.n)
        for mask in masks:
            if mask not in c.entries:
                raise MissingCorrelatorError(mask, c.n)
            dense[mask] = c.entries[mask]
        return PseudoDistribution(c.n, WalshTransform.inverse(dense))

    def reconstruct_at(self, c: CorrelatorVector, trunc: TruncationSpec, xs: Sequence[int]) -> np.ndarray:
        """Truncated probabilities at the basis indices xs only."""
        masks = trunc.subsets(c.n)
        missing = [m for m in masks if m not in c.entries]
        if missing:
            raise MissingCorrelatorError(missing[0], c.n)
        values = np.array([c.entries[m] for m in masks])
        return self.character_matrix(xs, masks) @ values / (1 << c.n)

    def character_matrix(self, xs: Sequence[int], masks: Sequence[int]) -> np.ndarray:
        """(-1)^{|x & S|} for every (x, S) pair."""
        xs = np.asarray(xs, dtype=np.int64)
        masks = np.asarray(masks, dtype=np.int64)
        overlap = np.bitwise_count(xs[:, None] & masks[None, :]) & 1
        return 1.0 - 2.0 * overlap

    def truncated_distribution(self, p, trunc: TruncationSpec) -> PseudoDistribution:
        return self.reconstruct(self.decompose(p), trunc)

    def marginal(self, p, qubits: Sequence[int]) -> np.ndarray:
        """Distribution of the chosen qubits, from the correlators supported inside them."""
        p = self._check_distribution(p)
        n = int(p.shape[0]).bit_length() - 1
        qubits = list(qubits)
        if len(set(qubits)) != len(qubits):
            raise DomainError(f"Marginal qubits must be distinct, got {qubits}")
        m = len(qubits)
        c = self.decompose_dense(p)
        reduced = np.zeros(1 << m)
        for local_mask in range(1 << m):
            local_qubits = [qubits[j] for j in BitMapper.mask_to_qubits(local_mask, m)]
            reduced[local_mask] = c[BitMapper.qubits_to_mask(local_qubits, n)]
        return WalshTransform.inverse(reduced)

    def empirical_correlators(
        self, samples, subsets: Sequence[SubsetIndex], mode: str = "z_parity", gamma: float = 0.0
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Monte-Carlo correlator estimates and their variances.

        Args:
            samples: (m, n) array of 0/1 bits
            subsets: subset masks to estimate
            mode: "z_parity" averages (-1)^{sum x_i}; "s_product" averages prod x_i
            gamma: pairwise correlation between samples

        Returns:
            Tuple of (estimates, variance estimates)
        """
        if mode not in ESTIMATOR_MODES:
            raise DomainError(f"Unknown estimator mode '{mode}', expected one of {ESTIMATOR_MODES}")
        samples = np.asarray(samples)
        if samples.ndim != 2 or samples.shape[0] == 0:
            raise DomainError("Empirical correlators need at least one sample")
        m, n = samples.shape
        indices = BitMapper.rows_to_indices(samples)
        inflation = 1.0 + (m - 1) * gamma
        estimates = np.empty(len(subsets))
        variances = np.empty(len(subsets))
        for position, mask in enumerate(subsets):
            if mask >= 1 << n:
                raise DimensionError(f"Subset mask {mask} outside {n} qubits")
            if mode == "z_parity":
                values = 1.0 - 2.0 * (np.bitwise_count(indices & mask) & 1)
                mean = float(values.mean())
                variances[position] = (1.0 - mean * mean) / m * inflation
            else:
                values = ((indices & mask) == mask).astype(np.float64)
                mean = float(values.mean())
                variances[position] = mean * (1.0 - mean) / m * inflation
            estimates[position] = mean
        return estimates, variances

    def correlation_spectrum(self, p) -> Dict[int, List[Tuple[int, float]]]:
        """|<Z_S>| grouped by order k = 0..n as (mask, value) pairs sorted by mask."""
        p = self._check_distribution(p)
        n = int(p.shape[0]).bit_length() - 1
        dense = np.abs(self.decompose_dense(p))
        return {k: [(mask, float(dense[mask])) for mask in BitMapper.subsets_of_order(n, k)] for k in range(n + 1)}

    def rfc_sample(
        self,
        n: int,
        policy: str,
        size: int,
        seed: int,
        k_max: Optional[int] = None,
        prob: float = 0.5,
    ) -> TruncationSpec:
        """Random correlator set of size D, always containing the empty set.

        policy "uniform_up_to" draws D - 1 distinct non-empty subsets of order <= k_max
        uniformly; "bernoulli" includes each qubit independently with probability prob
        and rejects duplicates.
        """
        if size < 1:
            raise DomainError(f"RFC size must be >= 1, got {size}")
        rng = np.random.default_rng(seed)
        if policy == "uniform_up_to":
            k_max = n if k_max is None else k_max
            candidates = [m for m in BitMapper.subsets_up_to(n, k_max) if m != 0]
            if size - 1 > len(candidates):
                raise DomainError(f"RFC size {size} exceeds the {len(candidates) + 1} available subsets")
            picks = rng.choice(len(candidates), size=size - 1, replace=False)
            omega = {0} | {candidates[int(i)] for i in picks}
        elif policy == "bernoulli":
            if size > 1 << n:
                raise DomainError(f"RFC size {size} exceeds the {1 << n} available subsets")
            if not 0.0 < prob <= 1.0:
                raise DomainError(f"Bernoulli inclusion probability must be in (0, 1], got {prob}")
            omega = {0}
            attempts = 0
            max_attempts = 1000 * size + 10000
            while len(omega) < size:
                attempts += 1
                if attempts > max_attempts:
                    raise DomainError(f"Bernoulli policy with prob={prob} could not fill {size} subsets")
                bits = rng.random(n) < prob
                mask = BitMapper.qubits_to_mask(np.flatnonzero(bits), n)
                omega.add(mask)
        else:
            raise DomainError(f"Unknown RFC policy '{policy}'")
        self.logger.debug("Sampled RFC set of size %d with policy %s", len(omega), policy)
        return TruncationSpec.rfc(omega)

    def parity_kernel(self, x: int, x_prime: int, omega: Iterable[int], n: int) -> float:
        """2^{-n} sum_{S in omega} (-1)^{|(x ^ x') & S|}."""
        d = int(x) ^ int(x_prime)
        total = sum(1 - 2 * ((d & int(mask)).bit_count() & 1) for mask in omega)
        return total / (1 << n)

    def parity_kernel_matrix(self, n: int, omega: Iterable[int]) -> np.ndarray:
        idx = BitMapper.basis_indices(n)
        masks = np.asarray(sorted(set(int(m) for m in omega)), dtype=np.int64)
        row = self.character_matrix(idx, masks).sum(axis=1) / (1 << n)
        return row[idx[:, None] ^ idx[None, :]]

    def _check_distribution(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=np.float64).reshape(-1)
        size = p.shape[0]
        if size == 0 or size & (size - 1):
            raise DimensionError(f"Distribution length must be a power of two, got {size}")
        if np.any(p < -1e-12):
            raise DomainError("Distribution has negative entries")
        total = float(p.sum())
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"Distribution is not normalized, sums to {total}")
        return p
