"""Born-machine training on truncated correlator reconstructions."""

import logging
from math import comb
from typing import List, Optional, Tuple

import numpy as np

from ..config.settings import Settings, get_settings
from ..errors import DimensionError, DomainError, MissingCorrelatorError
from ..models.circuit import Circuit
from ..models.fourier import CorrelatorVector, TruncationSpec
from ..models.pauli import PauliString
from ..models.training import DiscrepancyReport, LossSpec, TrainConfig, TrainResult
from ..utils.bit_mapper import BitMapper
from ..utils.walsh_transform import WalshTransform
from .fourier_service import FourierService
from .loss_service import LossService
from .statevector_service import StatevectorService
from .surrogate_service import SurrogateService

PARAMETER_SHIFT = np.pi / 2


class AdamOptimizer:
    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m: Optional[np.ndarray] = None
        self.v: Optional[np.ndarray] = None
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.m is None:
            self.m = np.zeros_like(theta)
            self.v = np.zeros_like(theta)
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return theta - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)


class SgdOptimizer:
    def __init__(self, learning_rate: float):
        self.learning_rate = learning_rate

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return theta - self.learning_rate * grad


class ModelEvaluator:
    """Circuit + truncation + surrogate, evaluated to a (pseudo-)distribution at theta.

    The statevector surrogate truncates the exact Walsh spectrum; iqp_pps and
    pauli_prop compute only the kept correlators.
    """

    def __init__(
        self,
        circuit: Circuit,
        truncation: TruncationSpec,
        surrogate: str = "statevector",
        h_max: Optional[int] = None,
        w_max: Optional[int] = None,
        settings: Optional[Settings] = None,
    ):
        self.circuit = circuit
        self.n = circuit.n
        self.truncation = truncation
        self.surrogate = surrogate
        self.h_max = h_max
        self.w_max = w_max
        self.masks = truncation.subsets(circuit.n)
        self.mask_array = np.asarray(self.masks, dtype=np.int64)
        self.statevector = StatevectorService(settings)
        self.surrogates = SurrogateService(settings)
        self.fourier = FourierService()
        self.iqp_spec = self.surrogates.iqp_spec_from_circuit(circuit) if surrogate == "iqp_pps" else None
        self._observables = None
        if surrogate == "pauli_prop":
            self._observables = [PauliString(self.n, 0, mask) for mask in self.masks]

    def correlators(self, theta) -> np.ndarray:
        """Kept correlators, aligned with self.masks."""
        if self.surrogate == "statevector":
            psi = self.statevector.simulate_amplitudes(self.circuit, theta)
            return WalshTransform.fwht(np.abs(psi) ** 2)[self.mask_array]
        if self.surrogate == "iqp_pps":
            return self.surrogates.iqp_correlators(self.iqp_spec, theta, self.masks, self.h_max)
        return np.array(
            [
                1.0 if mask == 0 else self.surrogates.pauli_propagate(self.circuit, obs, theta, self.w_max)
                for mask, obs in zip(self.masks, self._observables)
            ]
        )

    def distribution(self, theta) -> np.ndarray:
        dense = np.zeros(1 << self.n)
        dense[self.mask_array] = self.correlators(theta)
        return WalshTransform.inverse(dense)

    def values_at(self, theta, xs: np.ndarray) -> np.ndarray:
        """Reconstructed values at selected bitstrings only."""
        return self.fourier.character_matrix(xs, self.masks) @ self.correlators(theta) / (1 << self.n)

    def correlator_vector(self, theta) -> CorrelatorVector:
        values = self.correlators(theta)
        return CorrelatorVector(self.n, {int(m): float(v) for m, v in zip(self.masks, values)})


class TrainingService:
    """Gradient training, deployment evaluation and surrogate/quantum discrepancy diagnostics."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()
        self.logger = logging.getLogger(__name__)
        self.losses = LossService(self.settings)
        self.statevector = StatevectorService(self.settings)
        self.fourier = FourierService()

    def evaluator(self, ansatz: Circuit, config: TrainConfig) -> ModelEvaluator:
        return ModelEvaluator(ansatz, config.truncation, config.surrogate, config.h_max, config.w_max, self.settings)

    def train(
        self, ansatz: Circuit, target, loss: LossSpec, config: TrainConfig, theta_init=None
    ) -> TrainResult:
        """Minimize distance(reconstruction, target) over theta.

        loss_history[0] is the loss at the initial point and holds iterations + 1
        values; with batching each value is the loss on that step's batch.
        """
        target = np.asarray(target, dtype=np.float64).reshape(-1)
        if target.shape[0] != 1 << ansatz.n:
            raise DimensionError(f"Target has {target.shape[0]} entries, expected {1 << ansatz.n}")
        if loss.kind == "kl" and not config.truncation.is_full:
            raise DomainError("KL loss needs a non-negative model; use a full truncation")
        if config.batch is not None and loss.kind in ("emd", "kl"):
            raise DomainError(f"Loss '{loss.kind}' cannot be evaluated on bitstring batches")

        rng = np.random.default_rng(config.seed)
        if theta_init is not None:
            theta = np.asarray(theta_init, dtype=np.float64).copy()
        elif config.init == "data_driven":
            theta = self.init_from_data(ansatz, target)
        else:
            theta = rng.uniform(0.0, 2.0 * np.pi, size=ansatz.param_count)
        if theta.shape[0] != ansatz.param_count:
            raise DimensionError(f"Initial theta has {theta.shape[0]} entries, expected {ansatz.param_count}")
        theta_initial = theta.copy()

        evaluator = self.evaluator(ansatz, config)
        optimizer = self._optimizer(config)
        shared = set(ansatz.shared_parameters)
        history: List[float] = []
        self.logger.info(
            "Training %d parameters on %d qubits: %s loss, %s truncation, %s surrogate",
            ansatz.param_count,
            ansatz.n,
            loss.kind,
            config.truncation.describe(),
            config.surrogate,
        )
        for iteration in range(config.iterations):
            batch = self._draw_batch(rng, ansatz.n, config.batch)
            value, grad = self._loss_and_gradient(evaluator, theta, target, loss, config, batch, shared)
            history.append(value)
            theta = optimizer.step(theta, grad)
            self.logger.debug("Iteration %d: loss %.6g", iteration, value)
        history.append(self._loss(evaluator, theta, target, loss, self._draw_batch(rng, ansatz.n, config.batch)))
        self.logger.info("Training finished: loss %.6g -> %.6g", history[0], history[-1])

        metadata = {
            "n": ansatz.n,
            "param_count": ansatz.param_count,
            "ansatz": dict(ansatz.metadata),
            "loss": loss.describe(),
            "train": config.describe(),
        }
        return TrainResult(theta, tuple(history), evaluator.correlator_vector(theta), theta_initial, metadata)

    def _optimizer(self, config: TrainConfig):
        if config.optimizer == "adam":
            return AdamOptimizer(config.learning_rate, config.beta1, config.beta2, config.adam_epsilon)
        return SgdOptimizer(config.learning_rate)

    def _draw_batch(self, rng: np.random.Generator, n: int, batch: Optional[int]) -> Optional[np.ndarray]:
        if batch is None or batch >= 1 << n:
            return None
        return np.sort(rng.choice(1 << n, size=batch, replace=False))

    def _model_values(self, evaluator: ModelEvaluator, theta, batch) -> np.ndarray:
        if batch is None:
            return evaluator.distribution(theta)
        return evaluator.values_at(theta, batch)

    def _loss(self, evaluator: ModelEvaluator, theta, target, loss: LossSpec, batch) -> float:
        model = self._model_values(evaluator, theta, batch)
        if batch is None:
            return self.losses.distance(model, target, loss)
        return self._batch_loss(model - target[batch], batch, loss, evaluator.n)

    def _batch_loss(self, diff: np.ndarray, batch: np.ndarray, loss: LossSpec, n: int) -> float:
        if loss.kind == "sqe":
            return float(diff @ diff)
        kernel = self.losses.kernel_matrix(loss.kernel, n)[np.ix_(batch, batch)]
        return float(diff @ kernel @ diff)

    def _batch_gradient(self, diff: np.ndarray, batch: np.ndarray, loss: LossSpec, n: int) -> np.ndarray:
        if loss.kind == "sqe":
            return 2.0 * diff
        return 2.0 * self.losses.kernel_matrix(loss.kernel, n)[np.ix_(batch, batch)] @ diff

    def _loss_and_gradient(
        self, evaluator: ModelEvaluator, theta, target, loss: LossSpec, config: TrainConfig, batch, shared
    ) -> Tuple[float, np.ndarray]:
        """Loss at theta and its gradient by the chain rule through the model values."""
        model = self._model_values(evaluator, theta, batch)
        if batch is None:
            value = self.losses.distance(model, target, loss)
            outer = self.losses.distance_gradient(model, target, loss)
        else:
            diff = model - target[batch]
            value = self._batch_loss(diff, batch, loss, evaluator.n)
            outer = self._batch_gradient(diff, batch, loss, evaluator.n)
        grad = np.zeros_like(theta)
        for j in range(theta.shape[0]):
            if config.gradient == "parameter_shift" and j not in shared:
                step, scale = PARAMETER_SHIFT, 0.5
            else:
                step, scale = config.fd_step, 0.5 / config.fd_step
            shifted = theta.copy()
            shifted[j] += step
            plus = self._model_values(evaluator, shifted, batch)
            shifted[j] -= 2.0 * step
            minus = self._model_values(evaluator, shifted, batch)
            grad[j] = float(outer @ (plus - minus)) * scale
        return value, grad

    def deploy_evaluate(self, circuit: Circuit, theta_star, target, epsilon: float = 1e-12) -> float:
        """KL(target || Born(theta_star)) on the untruncated circuit."""
        psi = self.statevector.simulate_amplitudes(circuit, theta_star)
        return self.losses.kl_divergence(target, np.abs(psi) ** 2, epsilon)

    def mse_k(self, exact: CorrelatorVector, approx: CorrelatorVector, k: int) -> float:
        """Mean squared correlator error over all subsets of order k."""
        if exact.n != approx.n:
            raise DimensionError(f"Correlator vectors on {exact.n} and {approx.n} qubits")
        masks = BitMapper.subsets_of_order(exact.n, k)
        total = 0.0
        for mask in masks:
            for vector in (exact, approx):
                if mask not in vector:
                    raise MissingCorrelatorError(mask, exact.n)
            total += (exact[mask] - approx[mask]) ** 2
        return total / comb(exact.n, k)

    def init_from_data(self, ansatz: Circuit, data) -> np.ndarray:
        """theta_j = Pr(all bits on the support of generator j are 1) under the data distribution."""
        data = np.asarray(data, dtype=np.float64).reshape(-1)
        if data.shape[0] != 1 << ansatz.n:
            raise DimensionError(f"Data distribution has {data.shape[0]} entries, expected {1 << ansatz.n}")
        idx = BitMapper.basis_indices(ansatz.n)
        theta = np.zeros(ansatz.param_count)
        for j in range(ansatz.param_count):
            generator = ansatz.first_generator(j)
            if generator is None:
                continue
            support = generator.x_mask | generator.z_mask
            theta[j] = float(data[(idx & support) == support].sum())
        return theta

    def discrepancy_report(
        self, target, ansatz: Circuit, classical_result: TrainResult, quantum_result: TrainResult
    ) -> DiscrepancyReport:
        """Risk gap between the classical surrogate and its quantum deployment, with its bound.

        Risks are E_{x~target}[(target(x) - f(x))^2]. Correlator norms use the
        2^{-n/2} normalization, under which they equal Euclidean distances of the
        reconstructed distributions.

        C = sqrt(sum_x target(x) (s(x) + d(x) - 2 target(x))^2) is computed from the
        two models themselves, so by Cauchy-Schwarz the bound always holds and
        ``bound_satisfied`` only checks the numerics. ``constant_c_unweighted`` is the
        plain Euclidean norm of the same vector, an upper bound on C that does not
        lean on the target weights.
        """
        n = ansatz.n
        target = np.asarray(target, dtype=np.float64).reshape(-1)
        if target.shape[0] != 1 << n:
            raise DimensionError(f"Target has {target.shape[0]} entries, expected {1 << n}")
        for result in (classical_result, quantum_result):
            if result.final_correlators.n != n:
                raise DimensionError(f"Training result on {result.final_correlators.n} qubits, ansatz has {n}")

        scale = 2.0 ** (-n / 2)
        c_classical = classical_result.final_correlators.to_dense()
        c_quantum = self.fourier.decompose_dense(self._born(ansatz, quantum_result.theta_star))
        deployed = self._born(ansatz, classical_result.theta_star)
        c_deployed = self.fourier.decompose_dense(deployed)
        surrogate = WalshTransform.inverse(c_classical)

        norm_feature_gap = float(np.linalg.norm(scale * (c_classical - c_quantum)))
        norm_surrogate_mismatch = float(np.linalg.norm(scale * (c_quantum - c_deployed)))
        risk_classical = self._risk(target, surrogate)
        risk_deployed = self._risk(target, deployed)
        combined = (surrogate - target) + (deployed - target)
        constant_c = float(np.sqrt(np.sum(target * combined * combined)))
        constant_c_unweighted = float(np.linalg.norm(combined))
        bound_satisfied = abs(risk_classical - risk_deployed) <= constant_c * (
            norm_feature_gap + norm_surrogate_mismatch
        ) + 1e-12

        magnitude_classical = np.abs(c_classical[1:])
        magnitude_quantum = np.abs(c_quantum[1:])
        total = magnitude_classical.sum()
        c_max = float(magnitude_classical.max() / total) if total > 0 else 0.0
        norms = np.linalg.norm(magnitude_classical) * np.linalg.norm(magnitude_quantum)
        deviation = float(1.0 - magnitude_classical @ magnitude_quantum / norms) if norms > 0 else 1.0

        report = DiscrepancyReport(
            risk_classical,
            risk_deployed,
            norm_feature_gap,
            norm_surrogate_mismatch,
            constant_c,
            bool(bound_satisfied),
            c_max,
            deviation,
            constant_c_unweighted,
        )
        self.logger.info("Risk gap %.6g against bound %.6g", report.risk_gap, report.bound)
        return report

    def _born(self, circuit: Circuit, theta) -> np.ndarray:
        psi = self.statevector.simulate_amplitudes(circuit, theta)
        return np.abs(psi) ** 2

    def _risk(self, target: np.ndarray, model: np.ndarray) -> float:
        return float(np.sum(target * (target - model) ** 2))
