"""Distances between (pseudo-)distributions and the kernels behind them."""

import logging
from functools import lru_cache
from typing import Dict, Optional

import numpy as np

from ..config.settings import Settings, get_settings
from ..errors import DimensionError, DomainError, ResourceLimitError
from ..models.training import KernelSpec, LossSpec
from ..utils.bit_mapper import BitMapper
from ..utils.walsh_transform import WalshTransform

logger = logging.getLogger(__name__)


class LossService:
    """MMD, EMD, SQE and KL distances with their gradients."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()
        self.logger = logging.getLogger(__name__)

    def kernel_value(self, spec: KernelSpec, x: int, y: int, n: int) -> float:
        d = int(x) ^ int(y)
        if spec.kind == "gaussian":
            return float(np.exp(-d.bit_count() / (2.0 * spec.sigma**2)))
        if spec.kind == "anova_substring":
            self._check_window(spec, n)
            return float(sum(np.exp(-spec.gamma * (d & w).bit_count()) for w in BitMapper.window_masks(n, spec.window)))
        total = sum(1 - 2 * ((d & mask).bit_count() & 1) for mask in spec.omega)
        return total / (1 << n)

    def kernel_matrix(self, spec: KernelSpec, n: int) -> np.ndarray:
        """Dense 2^n x 2^n kernel over bitstrings, shared and read-only.

        Every supported kernel depends on x ^ y only, so one row is built and
        indexed by the XOR table.
        """
        if n > self.settings.max_kernel_qubits:
            raise ResourceLimitError(f"Dense kernels capped at {self.settings.max_kernel_qubits} qubits, got {n}")
        if spec.kind == "anova_substring":
            self._check_window(spec, n)
        return _kernel_table(spec, n)

    def kernel_walsh_spectrum(self, kernel: np.ndarray) -> Dict[int, float]:
        """Walsh weights mu_S of a shift-invariant kernel, K(x, y) = sum_S mu_S (-1)^{|(x^y) & S|}."""
        kernel = np.asarray(kernel, dtype=np.float64)
        size = kernel.shape[0]
        if kernel.shape != (size, size) or size & (size - 1):
            raise DimensionError(f"Kernel must be square with power-of-two side, got {kernel.shape}")
        n = size.bit_length() - 1
        idx = BitMapper.basis_indices(n)
        row = kernel[0]
        if np.max(np.abs(kernel - row[idx[:, None] ^ idx[None, :]])) > 1e-10:
            raise DomainError("Kernel is not shift-invariant")
        spectrum = WalshTransform.fwht(row) / size
        return {mask: float(spectrum[mask]) for mask in range(size)}

    def distance(self, p, q, loss: LossSpec) -> float:
        """Distance from model p (possibly a pseudo-distribution) to target q."""
        p, q, n = self._align(p, q)
        diff = p - q
        if loss.kind == "mmd":
            return float(diff @ self.kernel_matrix(loss.kernel, n) @ diff)
        if loss.kind == "sqe":
            return float(diff @ diff)
        if loss.kind == "emd":
            return float(np.abs(np.cumsum(diff)).sum())
        return self._kl(q, p, loss.epsilon)

    def distance_gradient(self, p, q, loss: LossSpec) -> np.ndarray:
        """Gradient of distance(p, q) with respect to the model entries p."""
        p, q, n = self._align(p, q)
        diff = p - q
        if loss.kind == "mmd":
            return 2.0 * self.kernel_matrix(loss.kernel, n) @ diff
        if loss.kind == "sqe":
            return 2.0 * diff
        if loss.kind == "emd":
            return np.cumsum(np.sign(np.cumsum(diff))[::-1])[::-1]
        if np.any(p < 0):
            raise DomainError("KL divergence needs a non-negative model distribution")
        return -q / np.maximum(p, loss.epsilon)

    def mmd_expectation_form(self, p, q, kernel: KernelSpec) -> float:
        """E_{p,p} K - 2 E_{p,q} K + E_{q,q} K."""
        p, q, n = self._align(p, q)
        matrix = self.kernel_matrix(kernel, n)
        return float(p @ matrix @ p - 2.0 * p @ matrix @ q + q @ matrix @ q)

    def kl_divergence(self, target, model, epsilon: float = 1e-12) -> float:
        """KL(target || model) with the model floored at epsilon."""
        model, target, _ = self._align(model, target)
        return self._kl(target, model, epsilon)

    def _kl(self, target: np.ndarray, model: np.ndarray, epsilon: float) -> float:
        if np.any(model < 0) or np.any(target < 0):
            raise DomainError("KL divergence needs non-negative distributions")
        support = target > 0
        smoothed = np.maximum(model[support], epsilon)
        return float(np.sum(target[support] * (np.log(target[support]) - np.log(smoothed))))

    def _align(self, p, q):
        p = np.asarray(p, dtype=np.float64).reshape(-1)
        q = np.asarray(q, dtype=np.float64).reshape(-1)
        if p.shape != q.shape:
            raise DimensionError(f"Distributions differ in length: {p.shape[0]} vs {q.shape[0]}")
        size = p.shape[0]
        if size == 0 or size & (size - 1):
            raise DimensionError(f"Distribution length must be a power of two, got {size}")
        return p, q, size.bit_length() - 1

    def _check_window(self, spec: KernelSpec, n: int):
        if spec.window > n:
            raise DomainError(f"ANOVA window {spec.window} longer than {n} qubits")


@lru_cache(maxsize=16)
def _kernel_table(spec: KernelSpec, n: int) -> np.ndarray:
    idx = BitMapper.basis_indices(n)
    if spec.kind == "gaussian":
        row = np.exp(-BitMapper.popcount(idx) / (2.0 * spec.sigma**2))
    elif spec.kind == "anova_substring":
        row = np.zeros(1 << n)
        for window in BitMapper.window_masks(n, spec.window):
            row += np.exp(-spec.gamma * BitMapper.popcount(idx & window))
    else:
        masks = np.asarray(sorted(spec.omega), dtype=np.int64)
        if masks.size and masks.max() >= 1 << n:
            raise DimensionError(f"Parity kernel subset outside {n} qubits")
        signs = 1.0 - 2.0 * (BitMapper.popcount(idx[:, None] & masks[None, :]) & 1)
        row = signs.sum(axis=1) / (1 << n)
    matrix = row[idx[:, None] ^ idx[None, :]]
    matrix.setflags(write=False)
    logger.debug("Built %s kernel on %d qubits", spec.kind, n)
    return matrix
