"""Runtime caps read from the environment."""

import os
from dataclasses import dataclass
from functools import lru_cache

from ..errors import ConfigError


def _env_int(name: str, default: int, minimum: int = 1) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError as e:
        raise ConfigError(f"Environment variable {name} must be an integer, got '{raw}'", key=name) from e
    if value < minimum:
        raise ConfigError(f"Environment variable {name} must be >= {minimum}, got {value}", key=name)
    return value


@dataclass(frozen=True)
class Settings:
    """Desk-scale resource caps shared by all services."""

    max_dense_qubits: int = 24
    max_eigen_qubits: int = 14
    dense_eigen_qubits: int = 8
    max_kernel_qubits: int = 12
    max_iqp_terms: int = 1 << 20
    max_propagation_terms: int = 1 << 18
    threads: int = 4

    @classmethod
    def from_env(cls) -> "Settings":
        """Build settings from BORNLAB_* environment variables."""
        return cls(
            max_dense_qubits=_env_int("BORNLAB_MAX_DENSE_QUBITS", cls.max_dense_qubits),
            max_eigen_qubits=_env_int("BORNLAB_MAX_EIGEN_QUBITS", cls.max_eigen_qubits),
            dense_eigen_qubits=_env_int("BORNLAB_DENSE_EIGEN_QUBITS", cls.dense_eigen_qubits),
            max_kernel_qubits=_env_int("BORNLAB_MAX_KERNEL_QUBITS", cls.max_kernel_qubits),
            max_iqp_terms=_env_int("BORNLAB_MAX_IQP_TERMS", cls.max_iqp_terms),
            max_propagation_terms=_env_int("BORNLAB_MAX_PROPAGATION_TERMS", cls.max_propagation_terms),
            threads=_env_int("BORNLAB_THREADS", cls.threads),
        )


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Process-wide settings, read once."""
    return Settings.from_env()
