"""Surrogate model types: IQP specs, propagation terms and RMPS transition matrices."""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..errors import DimensionError, DomainError
from .pauli import PauliString

T_IDENTITY = "T_identity"
T_Z = "T_Z"
T_FLIP = "T_flip"
T_PROJECTOR = "T_projector"


@dataclass(frozen=True)
class IqpSpec:
    """Commuting diagonal rotations sandwiched by Hadamard layers."""

    n: int
    generators: Tuple[PauliString, ...]
    param_indices: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        object.__setattr__(self, "param_indices", tuple(int(j) for j in self.param_indices))
        if len(self.generators) != len(self.param_indices):
            raise DimensionError(
                f"{len(self.generators)} generators but {len(self.param_indices)} parameter indices"
            )
        for generator in self.generators:
            if generator.n != self.n:
                raise DimensionError(f"Generator {generator} does not act on {self.n} qubits")
            if not generator.is_diagonal:
                raise DomainError(f"IQP generator {generator} is not Z-type")

    @classmethod
    def from_labels(cls, labels) -> "IqpSpec":
        generators = tuple(PauliString.from_label(label) for label in labels)
        return cls(generators[0].n, generators, tuple(range(len(generators))))

    @property
    def gate_count(self) -> int:
        return len(self.generators)

    @property
    def param_count(self) -> int:
        return max(self.param_indices) + 1 if self.param_indices else 0


@dataclass(frozen=True)
class PropagationTerm:
    """One flip vector of the IQP expansion.

    ``coefficient`` is the real product of sines and cosines; the i^{|r|} factor
    lives in ``residual.phase``.
    """

    flips: int
    coefficient: float
    residual: PauliString

    @property
    def flip_count(self) -> int:
        return self.flips.bit_count()

    @property
    def survives(self) -> bool:
        """Residual is X-only, so <+|residual|+> is non-zero."""
        return self.residual.z_mask == 0

    @property
    def value(self) -> float:
        """Contribution to <+|.|+>."""
        if not self.survives:
            return 0.0
        return self.coefficient * self.residual.coefficient.real


@dataclass(frozen=True)
class RmpsParams:
    n: int
    chi: int
    local_dim: int = 2

    def __post_init__(self):
        if self.local_dim < 2:
            raise DomainError(f"Local dimension must be >= 2, got {self.local_dim}")
        if self.chi < 1:
            raise DomainError(f"Bond dimension must be >= 1, got {self.chi}")
        if self.n < 1:
            raise DomainError(f"RMPS needs at least one site, got {self.n}")


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """2x2 site transfer matrix of the RMPS second-moment calculus."""

    kind: str
    local_dim: int
    chi: int
    entries: np.ndarray

    @staticmethod
    def _constants(local_dim: int, chi: int):
        l, c = float(local_dim), float(chi)
        denominator = l * l * c * c - 1.0
        eta_l = l * (c * c - 1.0) / denominator
        eta_chi = c * (l * l - 1.0) / denominator
        return l, c, denominator, eta_l, eta_chi

    @classmethod
    def identity(cls, local_dim: int, chi: int) -> "TransitionMatrix":
        _, _, _, eta_l, eta_chi = cls._constants(local_dim, chi)
        return cls(T_IDENTITY, local_dim, chi, np.array([[1.0, eta_chi], [0.0, eta_l]]))

    @classmethod
    def z(cls, local_dim: int, chi: int) -> "TransitionMatrix":
        l, c, denominator, _, _ = cls._constants(local_dim, chi)
        entries = np.array([[-1.0, -c], [l * c, l * c * c]]) / (l * denominator)
        return cls(T_Z, local_dim, chi, entries)

    @classmethod
    def flip(cls, local_dim: int, chi: int) -> "TransitionMatrix":
        _, _, _, eta_l, eta_chi = cls._constants(local_dim, chi)
        return cls(T_FLIP, local_dim, chi, np.array([[eta_l, 0.0], [eta_chi, 1.0]]))

    @classmethod
    def projector(cls, local_dim: int, chi: int) -> "TransitionMatrix":
        l, c, denominator, _, _ = cls._constants(local_dim, chi)
        zeta = (l * c * c - 1.0) / (l * denominator)
        mu = c * (l - 1.0) / (l * denominator)
        return cls(T_PROJECTOR, local_dim, chi, np.array([[zeta, mu], [mu, zeta]]))
