"""Exceptions raised by bornlab services."""

from typing import Any, Optional


class BornLabError(Exception):
    """Base class for all bornlab errors."""


class DimensionError(BornLabError, ValueError):
    """Operands disagree on qubit count or vector length."""


class ParameterCountError(DimensionError):
    """Parameter vector length does not match the circuit."""


class DomainError(BornLabError, ValueError):
    """Argument lies outside the domain of an operation."""


class MissingCorrelatorError(BornLabError, KeyError):
    """A correlator required by a truncation is absent."""

    def __init__(self, subset_mask: int, n: int):
        self.subset_mask = subset_mask
        self.n = n
        super().__init__(f"Missing correlator for subset mask {subset_mask:0{n}b}")

    def __str__(self) -> str:
        return self.args[0]


class ClosureLimitError(BornLabError, RuntimeError):
    """Lie closure grew past its dimension cap.

    The partially closed algebra is kept on ``partial``.
    """

    def __init__(self, message: str, partial: Optional[Any] = None):
        super().__init__(message)
        self.partial = partial


class ExpansionLimitError(BornLabError, RuntimeError):
    """Surrogate expansion exceeded its configured term cap."""


class ResourceLimitError(BornLabError, RuntimeError):
    """Requested size exceeds a configured desk-scale cap."""


class ConvergenceError(BornLabError, RuntimeError):
    """Iterative solver did not converge."""


class DatasetError(BornLabError, ValueError):
    """Malformed binary dataset."""


class ConfigError(BornLabError, ValueError):
    """Invalid experiment configuration."""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key
