"""Concentration analysis: closed-form variances and their Monte-Carlo oracles."""

import logging
from math import comb
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import unitary_group

from ..config.settings import Settings, get_settings
from ..errors import DomainError
from ..models.circuit import AnsatzSpec, Circuit, Gate
from ..models.surrogate import RmpsParams
from ..models.training import ScramblingCheck, VarianceReport
from ..utils.bit_mapper import BitMapper
from ..utils.walsh_transform import WalshTransform
from .statevector_service import StatevectorService
from .surrogate_service import SurrogateService

RMPS_QUANTITIES = ("correlator", "marginal", "truncated_prob", "renyi2")
DEFAULT_MATCHGATE_GATES = 40


class VarianceService:
    """Matchcircuit, Haar and RMPS variance formulas next to sampled estimates."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()
        self.logger = logging.getLogger(__name__)
        self.statevector = StatevectorService(self.settings)
        self.surrogates = SurrogateService(self.settings)

    # Closed forms

    def matchgate_correlator_variance(self, n: int, k: int) -> float:
        """C(n, k) / C(2n, 2k) for 1 <= k <= n - 1.

        Orders 0 and n are excluded since parity conservation pins those correlators to 1.
        """
        if not 1 <= k <= n - 1:
            raise DomainError(f"Matchcircuit correlator variance needs 1 <= k <= n-1, got n={n}, k={k}")
        return comb(n, k) / comb(2 * n, 2 * k)

    def matchgate_truncated_variance(self, n: int, k: int) -> float:
        """Variance of the order-k truncated probability at an even-weight bitstring."""
        if not 0 <= k <= n:
            raise DomainError(f"Truncation order {k} outside [0, {n}]")
        total = 0.0
        for p in range(1, n):
            if p > k:
                continue
            weight = 2 if n - p <= k else 1
            total += weight * comb(n, p) ** 2 / comb(2 * n, 2 * p)
        return total / 4.0**n

    def haar_truncation_error(self, n: int, k: int) -> Tuple[float, float]:
        """(Haar mean squared truncation error, deterministic bound) with N_k = sum_{p<=k} C(n, p)."""
        kept = self._kept_count(n, k)
        missing = (1 << n) - kept
        return missing / 8.0**n, (missing / (1 << n)) ** 2

    def haar_truncation_error_exact(self, n: int, k: int) -> float:
        """Mean squared truncation error using E<Z_S>^2 = 1/(2^n + 1)."""
        missing = (1 << n) - self._kept_count(n, k)
        return missing / (4.0**n * ((1 << n) + 1))

    def _kept_count(self, n: int, k: int) -> int:
        if not 0 <= k <= n:
            raise DomainError(f"Truncation order {k} outside [0, {n}]")
        return sum(comb(n, p) for p in range(k + 1))

    # Monte-Carlo machinery

    def mc_variance(
        self,
        quantity: Callable[[np.random.Generator], float],
        draws: int,
        seed: int,
        closed_form: Optional[float] = None,
        central: bool = True,
    ) -> VarianceReport:
        """Sample a scalar quantity and estimate its variance with a jackknife error.

        Every draw gets its own generator spawned from ``seed``. With ``central=False``
        the report carries the raw second moment E[q^2] instead.
        """
        if draws < 2:
            raise DomainError(f"Monte-Carlo variance needs at least 2 draws, got {draws}")
        children = np.random.SeedSequence(seed).spawn(draws)
        values = np.array([float(quantity(np.random.default_rng(child))) for child in children])
        if central:
            estimate, std_error = self._jackknife_variance(values)
        else:
            squares = values * values
            estimate = float(squares.mean())
            std_error = float(squares.std(ddof=1) / np.sqrt(draws))
        relative_gap = None
        if closed_form is not None:
            gap = abs(closed_form - estimate)
            relative_gap = gap / std_error if std_error > 0 else (0.0 if gap == 0 else float("inf"))
        self.logger.debug("MC estimate %.6g +/- %.2g over %d draws", estimate, std_error, draws)
        return VarianceReport(closed_form, estimate, std_error, draws, relative_gap)

    def _jackknife_variance(self, values: np.ndarray) -> Tuple[float, float]:
        count = values.shape[0]
        variance = float(values.var(ddof=1))
        if count == 2:
            return variance, float(np.sqrt(2.0 / (count - 1)) * variance)
        total = values.sum()
        squares = (values * values).sum()
        loo_mean = (total - values) / (count - 1)
        loo_var = (squares - values * values - (count - 1) * loo_mean * loo_mean) / (count - 2)
        spread = ((loo_var - loo_var.mean()) ** 2).sum()
        return variance, float(np.sqrt((count - 1) / count * spread))

    # Monte-Carlo drivers

    def matchgate_monte_carlo(
        self, n: int, k: int, draws: int, seed: int, gates: int = DEFAULT_MATCHGATE_GATES
    ) -> VarianceReport:
        """Var <Z_S> over random matchcircuits for S = the first k qubits."""
        closed_form = self.matchgate_correlator_variance(n, k)
        mask = BitMapper.qubits_to_mask(range(k), n)
        signs = BitMapper.parity_signs(n, mask)

        def quantity(rng: np.random.Generator) -> float:
            return float(signs @ self._random_matchcircuit_distribution(n, gates, rng))

        return self.mc_variance(quantity, draws, seed, closed_form)

    def matchgate_truncated_monte_carlo(
        self, n: int, k: int, draws: int, seed: int, gates: int = DEFAULT_MATCHGATE_GATES
    ) -> VarianceReport:
        """Var Pr^(k)(0...0) over random matchcircuits."""
        closed_form = self.matchgate_truncated_variance(n, k)
        masks = np.asarray(BitMapper.subsets_up_to(n, k), dtype=np.int64)

        def quantity(rng: np.random.Generator) -> float:
            correlators = WalshTransform.fwht(self._random_matchcircuit_distribution(n, gates, rng))
            return float(correlators[masks].sum() / (1 << n))

        return self.mc_variance(quantity, draws, seed, closed_form)

    def _random_matchcircuit_distribution(self, n: int, gates: int, rng: np.random.Generator) -> np.ndarray:
        spec = AnsatzSpec("matchcircuit", n, gate_count=gates, seed=int(rng.integers(2**62)))
        circuit = self.statevector.build_ansatz(spec)
        theta = rng.uniform(0.0, 2.0 * np.pi, size=circuit.param_count)
        psi = self.statevector.simulate_amplitudes(circuit, theta)
        return np.abs(psi) ** 2

    def haar_truncation_monte_carlo(self, n: int, k: int, draws: int, seed: int) -> VarianceReport:
        """E[(Pr(0) - Pr^(k)(0))^2] over Haar states against the exact-moment closed form."""
        closed_form = self.haar_truncation_error_exact(n, k)
        dropped = np.asarray([m for m in range(1 << n) if m.bit_count() > k], dtype=np.int64)

        def quantity(rng: np.random.Generator) -> float:
            correlators = WalshTransform.fwht(self._haar_distribution(n, rng))
            return float(correlators[dropped].sum() / (1 << n))

        return self.mc_variance(quantity, draws, seed, closed_form, central=False)

    def haar_single_qubit_monte_carlo(self, draws: int, seed: int) -> VarianceReport:
        """Var <Z> of a Haar-random qubit, 1/3."""

        def quantity(rng: np.random.Generator) -> float:
            p = self._haar_distribution(1, rng)
            return float(p[0] - p[1])

        return self.mc_variance(quantity, draws, seed, 1.0 / 3.0)

    def _haar_distribution(self, n: int, rng: np.random.Generator) -> np.ndarray:
        amplitudes = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
        probabilities = np.abs(amplitudes) ** 2
        return probabilities / probabilities.sum()

    def rmps_monte_carlo(
        self,
        params: RmpsParams,
        quantity: str,
        draws: int,
        seed: int,
        subset_mask: int = 0,
        m: int = 1,
        k: int = 1,
    ) -> VarianceReport:
        """Sampled RMPS moments next to the transfer-matrix closed forms.

        "correlator" reports Var <Z_S / 2^{|S|/2}> for subset_mask; "marginal" reports
        E[Pr(first m bits = 0)^2]; "truncated_prob" reports Var Pr^(k)(0); "renyi2"
        reports E Tr(rho_A^2) for the first k sites.
        """
        if quantity not in RMPS_QUANTITIES:
            raise DomainError(f"Unknown RMPS quantity '{quantity}', expected one of {RMPS_QUANTITIES}")
        if params.local_dim != 2:
            raise DomainError("RMPS Monte Carlo is defined for qubits only")
        n = params.n
        if quantity == "renyi2":
            if not 1 <= k <= n:
                raise DomainError(f"Subsystem size {k} outside [1, {n}]")
            closed_form = self.surrogates.rmps_renyi2_max(params, k)

            def purity(rng: np.random.Generator) -> float:
                block = self.surrogates.sample_rmps_state(params, rng).reshape(1 << k, -1)
                # squared by the non-central estimate
                return float(np.linalg.norm(block @ block.conj().T))

            return self.mc_variance(purity, draws, seed, closed_form, central=False)
        if quantity == "truncated_prob":
            closed_form = self.surrogates.rmps_truncated_prob_variance(params, k)
            masks = np.asarray(BitMapper.subsets_up_to(n, k), dtype=np.int64)

            def truncated(rng: np.random.Generator) -> float:
                correlators = WalshTransform.fwht(self.surrogates.sample_rmps_probabilities(params, rng))
                return float(correlators[masks].sum() / (1 << n))

            return self.mc_variance(truncated, draws, seed, closed_form)
        if quantity == "correlator":
            closed_form = self.surrogates.rmps_correlator_variance(params, subset_mask)
            weights = BitMapper.parity_signs(n, subset_mask) / 2.0 ** (subset_mask.bit_count() / 2)
        else:
            closed_form = self.surrogates.rmps_marginal_variance(params, m)
            weights = (BitMapper.basis_indices(n) >> (n - m) == 0).astype(np.float64)

        def sample(rng: np.random.Generator) -> float:
            return float(weights @ self.surrogates.sample_rmps_probabilities(params, rng))

        return self.mc_variance(sample, draws, seed, closed_form, central=quantity == "correlator")

    def scrambling_bound_check(
        self, n: int, subset_mask: int, draws: int, seed: int, layers: int = 2, epsilon: float = 0.1
    ) -> ScramblingCheck:
        """Empirical Var <Z_S> over brickwork circuits ending in a Haar single-qubit layer.

        The bound is (2/3)^{|S|}.
        """
        if draws < 100:
            raise DomainError(f"Scrambling check needs at least 100 draws, got {draws}")
        if subset_mask == 0 or subset_mask >= 1 << n:
            raise DomainError(f"Subset mask {subset_mask} must be a non-empty subset of {n} qubits")
        signs = BitMapper.parity_signs(n, subset_mask)

        def quantity(rng: np.random.Generator) -> float:
            circuit = self._scrambling_circuit(n, layers, rng)
            psi = self.statevector.simulate_amplitudes(circuit)
            return float(signs @ (np.abs(psi) ** 2))

        report = self.mc_variance(quantity, draws, seed)
        bound = (2.0 / 3.0) ** subset_mask.bit_count()
        check = ScramblingCheck(report.mc_mean, bound, epsilon)
        if not check.within_bound:
            self.logger.warning("Scrambling bound violated: %.6g > %.6g", check.empirical_var, bound)
        return check

    def _scrambling_circuit(self, n: int, layers: int, rng: np.random.Generator) -> Circuit:
        gates = []
        for layer in range(layers):
            gates += [Gate.single_qubit_unitary(q, unitary_group.rvs(2, random_state=rng)) for q in range(n)]
            gates += [Gate.cnot(q, q + 1) for q in range(layer % 2, n - 1, 2)]
        gates += [Gate.single_qubit_unitary(q, unitary_group.rvs(2, random_state=rng)) for q in range(n)]
        return Circuit(n, gates, 0, {"kind": "scrambling", "layers": layers})

    def scaling_fit(self, ns: Sequence[float], values: Sequence[float]) -> Dict[str, float]:
        """Least-squares slopes of log(value) against log(n) and against n."""
        ns = np.asarray(ns, dtype=np.float64)
        values = np.asarray(values, dtype=np.float64)
        if ns.shape != values.shape or ns.shape[0] < 2:
            raise DomainError("Scaling fit needs at least two matching (n, value) points")
        if np.any(values <= 0) or np.any(ns <= 0):
            raise DomainError("Scaling fit needs positive n and values")
        log_values = np.log(values)
        return {
            "loglog_slope": float(np.polyfit(np.log(ns), log_values, 1)[0]),
            "loglinear_slope": float(np.polyfit(ns, log_values, 1)[0]),
        }
