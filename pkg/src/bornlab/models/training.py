"""Loss, kernel, training and report types."""

from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Optional, Tuple

import numpy as np

from ..errors import DomainError
from .fourier import CorrelatorVector, TruncationSpec

KERNEL_KINDS = ("gaussian", "anova_substring", "parity")
LOSS_KINDS = ("mmd", "emd", "sqe", "kl")
SURROGATE_KINDS = ("statevector", "iqp_pps", "pauli_prop")
OPTIMIZER_KINDS = ("adam", "sgd")
GRADIENT_KINDS = ("parameter_shift", "finite_difference")
INIT_KINDS = ("random_uniform", "data_driven")


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    sigma: float = 1.0
    window: int = 1
    gamma: float = 1.0
    omega: FrozenSet[int] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise DomainError(f"Unknown kernel '{self.kind}', expected one of {KERNEL_KINDS}")
        if self.kind == "gaussian" and not self.sigma > 0:
            raise DomainError(f"Gaussian bandwidth must be positive, got {self.sigma}")
        if self.kind == "anova_substring":
            if self.window < 1:
                raise DomainError(f"ANOVA window must be >= 1, got {self.window}")
            if not self.gamma > 0:
                raise DomainError(f"ANOVA decay must be positive, got {self.gamma}")
        if self.kind == "parity":
            object.__setattr__(self, "omega", frozenset(int(m) for m in self.omega))

    @classmethod
    def gaussian(cls, sigma: float) -> "KernelSpec":
        return cls("gaussian", sigma=sigma)

    @classmethod
    def anova_substring(cls, window: int, gamma: float) -> "KernelSpec":
        return cls("anova_substring", window=window, gamma=gamma)

    @classmethod
    def parity(cls, omega) -> "KernelSpec":
        return cls("parity", omega=frozenset(omega))

    def describe(self) -> Dict[str, Any]:
        if self.kind == "gaussian":
            return {"kind": "gaussian", "sigma": self.sigma}
        if self.kind == "anova_substring":
            return {"kind": "anova_substring", "window": self.window, "gamma": self.gamma}
        return {"kind": "parity", "omega": sorted(self.omega)}


@dataclass(frozen=True)
class LossSpec:
    kind: str
    kernel: Optional[KernelSpec] = None
    epsilon: float = 1e-12

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise DomainError(f"Unknown loss '{self.kind}', expected one of {LOSS_KINDS}")
        if self.kind == "mmd" and self.kernel is None:
            raise DomainError("MMD loss requires a kernel")
        if self.kind == "kl" and not self.epsilon > 0:
            raise DomainError(f"KL smoothing must be positive, got {self.epsilon}")

    @classmethod
    def mmd(cls, kernel: KernelSpec) -> "LossSpec":
        return cls("mmd", kernel=kernel)

    @classmethod
    def emd(cls) -> "LossSpec":
        return cls("emd")

    @classmethod
    def sqe(cls) -> "LossSpec":
        return cls("sqe")

    @classmethod
    def kl(cls, epsilon: float = 1e-12) -> "LossSpec":
        return cls("kl", epsilon=epsilon)

    def describe(self) -> Dict[str, Any]:
        info: Dict[str, Any] = {"kind": self.kind}
        if self.kernel is not None:
            info["kernel"] = self.kernel.describe()
        if self.kind == "kl":
            info["epsilon"] = self.epsilon
        return info


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer, gradient rule, truncation and surrogate choice for one run."""

    iterations: int = 100
    learning_rate: float = 0.05
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    gradient: str = "parameter_shift"
    fd_step: float = 1e-4
    truncation: TruncationSpec = field(default_factory=TruncationSpec.full)
    surrogate: str = "statevector"
    h_max: Optional[int] = None
    w_max: Optional[int] = None
    batch: Optional[int] = None
    seed: int = 0
    init: str = "random_uniform"

    def __post_init__(self):
        if self.iterations < 0:
            raise DomainError(f"iterations must be >= 0, got {self.iterations}")
        if not self.learning_rate > 0:
            raise DomainError(f"learning rate must be positive, got {self.learning_rate}")
        if self.optimizer not in OPTIMIZER_KINDS:
            raise DomainError(f"Unknown optimizer '{self.optimizer}'")
        if self.gradient not in GRADIENT_KINDS:
            raise DomainError(f"Unknown gradient rule '{self.gradient}'")
        if self.surrogate not in SURROGATE_KINDS:
            raise DomainError(f"Unknown surrogate '{self.surrogate}'")
        if self.init not in INIT_KINDS:
            raise DomainError(f"Unknown initialization '{self.init}'")
        if self.batch is not None and self.batch < 1:
            raise DomainError(f"batch must be >= 1, got {self.batch}")
        if not self.fd_step > 0:
            raise DomainError(f"finite-difference step must be positive, got {self.fd_step}")

    def describe(self) -> Dict[str, Any]:
        return {
            "iterations": self.iterations,
            "learning_rate": self.learning_rate,
            "optimizer": self.optimizer,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "adam_epsilon": self.adam_epsilon,
            "gradient": self.gradient,
            "fd_step": self.fd_step,
            "truncation": self.truncation.describe(),
            "surrogate": self.surrogate,
            "h_max": self.h_max,
            "w_max": self.w_max,
            "batch": self.batch,
            "seed": self.seed,
            "init": self.init,
        }


@dataclass(frozen=True, eq=False)
class TrainResult:
    theta_star: np.ndarray
    loss_history: Tuple[float, ...]
    final_correlators: CorrelatorVector
    theta_initial: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def initial_loss(self) -> float:
        return self.loss_history[0]

    @property
    def final_loss(self) -> float:
        return self.loss_history[-1]


@dataclass(frozen=True)
class DiscrepancyReport:
    risk_classical: float
    risk_quantum_deployed: float
    norm_feature_gap: float
    norm_surrogate_mismatch: float
    constant_c: float
    bound_satisfied: bool
    c_max: float
    alignment_deviation: float
    constant_c_unweighted: float

    @property
    def risk_gap(self) -> float:
        return abs(self.risk_classical - self.risk_quantum_deployed)

    @property
    def bound(self) -> float:
        return self.constant_c * (self.norm_feature_gap + self.norm_surrogate_mismatch)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "risk_classical": self.risk_classical,
            "risk_quantum_deployed": self.risk_quantum_deployed,
            "risk_gap": self.risk_gap,
            "norm_feature_gap": self.norm_feature_gap,
            "norm_surrogate_mismatch": self.norm_surrogate_mismatch,
            "constant_c": self.constant_c,
            "constant_c_unweighted": self.constant_c_unweighted,
            "bound": self.bound,
            "bound_satisfied": self.bound_satisfied,
            "alignment": {"c_max": self.c_max, "proportionality_deviation": self.alignment_deviation},
        }


@dataclass(frozen=True)
class VarianceReport:
    """Closed form next to its Monte-Carlo estimate.

    ``relative_gap`` is |closed_form - mc_mean| in units of the jackknife
    standard error.
    """

    closed_form: Optional[float]
    mc_mean: float
    mc_std_error: float
    draws: int
    relative_gap: Optional[float] = None

    @property
    def monte_carlo(self) -> Tuple[float, float, int]:
        return (self.mc_mean, self.mc_std_error, self.draws)

    def within(self, std_errors: float = 4.0) -> bool:
        if self.closed_form is None:
            return True
        return abs(self.closed_form - self.mc_mean) <= std_errors * self.mc_std_error + 1e-15


@dataclass(frozen=True)
class ScramblingCheck:
    empirical_var: float
    bound: float
    epsilon: float

    @property
    def within_bound(self) -> bool:
        return self.empirical_var <= self.bound * (1.0 + self.epsilon)

    def __iter__(self):
        yield self.empirical_var
        yield self.bound
