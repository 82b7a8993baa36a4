"""Classical surrogates for Born-machine correlators."""

import logging
from itertools import combinations
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import unitary_group

from ..config.settings import Settings, get_settings
from ..errors import DomainError, ExpansionLimitError, ParameterCountError
from ..models.circuit import CNOT, HADAMARD, PAULI_ROTATION, Circuit
from ..models.pauli import PauliString
from ..models.surrogate import IqpSpec, PropagationTerm, RmpsParams, TransitionMatrix
from ..utils.bit_mapper import BitMapper
from .pauli_algebra_service import PauliAlgebraService, _product_phase

_I_POWERS = (1.0 + 0j, 1j, -1.0 + 0j, -1j)
_ONES = np.ones(2)


class SurrogateService:
    """IQP Pauli-path expansion, weight-truncated Pauli propagation and RMPS calculus."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()
        self.logger = logging.getLogger(__name__)
        self.pauli_algebra = PauliAlgebraService()
        self.term_counter = 0

    # IQP

    def iqp_spec_from_circuit(self, circuit: Circuit) -> IqpSpec:
        """Read the commuting diagonal block out of an H^n . U_c . H^n circuit."""
        n = circuit.n
        gates = circuit.gates
        if len(gates) < 2 * n:
            raise DomainError("Circuit is too short to be an IQP circuit")
        head, body, tail = gates[:n], gates[n : len(gates) - n], gates[len(gates) - n :]
        for layer in (head, tail):
            if sorted(g.qubits[0] for g in layer if g.kind == HADAMARD) != list(range(n)):
                raise DomainError("IQP circuit must start and end with a full Hadamard layer")
        for gate in body:
            if gate.kind != PAULI_ROTATION or not gate.generator.is_diagonal:
                raise DomainError("IQP body may only hold diagonal Pauli rotations")
        return IqpSpec(n, tuple(g.generator for g in body), tuple(g.param_index for g in body))

    def iqp_anticommuting_set(self, spec: IqpSpec, subset_mask: int) -> Tuple[int, ...]:
        """Gate positions whose generator overlaps the subset on an odd number of qubits."""
        return tuple(
            j for j, generator in enumerate(spec.generators) if (generator.z_mask & subset_mask).bit_count() % 2
        )

    def iqp_terms(self, spec: IqpSpec, theta, subset_mask: int, h_max: Optional[int] = None) -> List[PropagationTerm]:
        """Every flip vector r with |r| <= h_max, with its coefficient and residual operator."""
        angles = self._iqp_angles(spec, theta)
        anticommuting = self.iqp_anticommuting_set(spec, subset_mask)
        budget = self._flip_budget(len(anticommuting), h_max)
        observable = PauliString(spec.n, subset_mask, 0)
        cosines = {j: np.cos(angles[j]) for j in anticommuting}
        sines = {j: np.sin(angles[j]) for j in anticommuting}
        terms = []
        for weight in range(budget + 1):
            for chosen in combinations(range(len(anticommuting)), weight):
                self.term_counter += 1
                chosen_gates = {anticommuting[c] for c in chosen}
                coefficient = 1.0
                z_mask = 0
                flips = 0
                for position, j in enumerate(anticommuting):
                    if j in chosen_gates:
                        coefficient *= sines[j]
                        z_mask ^= spec.generators[j].z_mask
                        flips |= 1 << position
                    else:
                        coefficient *= cosines[j]
                residual = self.pauli_algebra.pauli_product(PauliString(spec.n, 0, z_mask), observable)
                terms.append(PropagationTerm(flips, float(coefficient), residual.with_phase(residual.phase + weight)))
        return terms

    def iqp_surrogate_correlator(self, spec: IqpSpec, theta, subset_mask: int, h_max: Optional[int] = None) -> float:
        """<Z_S> of the IQP circuit summed over flip vectors with |r| <= h_max.

        Terms are grouped by (residual Z mask, flip count); only residuals with an
        empty Z part survive <+|.|+>.
        """
        if subset_mask == 0:
            return 1.0
        angles = self._iqp_angles(spec, theta)
        anticommuting = self.iqp_anticommuting_set(spec, subset_mask)
        budget = self._flip_budget(len(anticommuting), h_max)
        paths: Dict[Tuple[int, int], float] = {(0, 0): 1.0}
        for j in anticommuting:
            cosine, sine = np.cos(angles[j]), np.sin(angles[j])
            z_gate = spec.generators[j].z_mask
            updated: Dict[Tuple[int, int], float] = {}
            for (z_mask, weight), value in paths.items():
                key = (z_mask, weight)
                updated[key] = updated.get(key, 0.0) + value * cosine
                if weight < budget:
                    flipped = (z_mask ^ z_gate, weight + 1)
                    updated[flipped] = updated.get(flipped, 0.0) + value * sine
            paths = updated
        total = 0.0
        for (z_mask, weight), value in paths.items():
            if z_mask == 0 and weight % 2 == 0:
                total += value * (-1.0 if weight % 4 == 2 else 1.0)
        return float(total)

    def iqp_correlators(self, spec: IqpSpec, theta, masks: Sequence[int], h_max: Optional[int] = None) -> np.ndarray:
        return np.array([self.iqp_surrogate_correlator(spec, theta, int(m), h_max) for m in masks])

    def iqp_truncated_prob(self, spec: IqpSpec, theta, x: int, k: int, h_max: Optional[int] = None) -> float:
        """2^{-n} sum over |S| <= k of (-1)^{|x & S|} times the surrogate correlator."""
        if not 0 <= k <= spec.n:
            raise DomainError(f"Truncation order {k} outside [0, {spec.n}]")
        total = 0.0
        for mask in BitMapper.subsets_up_to(spec.n, k):
            sign = -1.0 if (x & mask).bit_count() % 2 else 1.0
            total += sign * self.iqp_surrogate_correlator(spec, theta, mask, h_max)
        return total / (1 << spec.n)

    def _iqp_angles(self, spec: IqpSpec, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64).reshape(-1)
        if theta.shape[0] < spec.param_count:
            raise ParameterCountError(f"IQP spec needs {spec.param_count} parameters, got {theta.shape[0]}")
        return theta[list(spec.param_indices)] if spec.param_indices else np.zeros(0)

    def _flip_budget(self, m: int, h_max: Optional[int]) -> int:
        budget = m if h_max is None else max(0, min(h_max, m))
        terms = sum(comb(m, w) for w in range(budget + 1))
        if terms > self.settings.max_iqp_terms:
            raise ExpansionLimitError(
                f"IQP expansion with M={m} and flip budget {budget} needs {terms} terms, "
                f"cap is {self.settings.max_iqp_terms}"
            )
        return budget

    # Generic Pauli propagation

    def pauli_propagate(self, circuit: Circuit, observable: PauliString, theta, w_max: Optional[int] = None) -> float:
        """<0|U^dag O U|0> by Heisenberg back-propagation with a Pauli-weight cap.

        Rotations split into cos/sin branches; H and CNOT conjugate exactly.
        Strings heavier than w_max are dropped after every gate.
        """
        n = circuit.n
        if observable.n != n:
            raise DomainError(f"Observable acts on {observable.n} qubits, circuit has {n}")
        theta = np.asarray(theta, dtype=np.float64).reshape(-1)
        if theta.shape[0] != circuit.param_count:
            raise ParameterCountError(f"Circuit expects {circuit.param_count} parameters, got {theta.shape[0]}")
        w_max = n if w_max is None else w_max
        terms: Dict[Tuple[int, int], complex] = {observable.key: observable.coefficient}
        for gate in reversed(circuit.gates):
            if gate.kind == PAULI_ROTATION:
                terms = self._propagate_rotation(terms, gate.generator, theta[gate.param_index])
            elif gate.kind == HADAMARD:
                terms = self._propagate_hadamard(terms, n - 1 - gate.qubits[0])
            elif gate.kind == CNOT:
                terms = self._propagate_cnot(terms, n - 1 - gate.qubits[0], n - 1 - gate.qubits[1])
            else:
                raise DomainError(f"Pauli propagation does not support '{gate.kind}' gates")
            if w_max < n:
                terms = {key: value for key, value in terms.items() if (key[0] | key[1]).bit_count() <= w_max}
            if len(terms) > self.settings.max_propagation_terms:
                raise ExpansionLimitError(
                    f"Pauli propagation reached {len(terms)} terms, cap is {self.settings.max_propagation_terms}"
                )
        value = sum(coefficient for (x_mask, _), coefficient in terms.items() if x_mask == 0)
        return float(np.real(value))

    def _propagate_rotation(self, terms, generator: PauliString, angle: float):
        cosine, sine = np.cos(angle), np.sin(angle)
        gx, gz = generator.x_mask, generator.z_mask
        updated: Dict[Tuple[int, int], complex] = {}
        for (x_mask, z_mask), coefficient in terms.items():
            overlap = (gx & z_mask).bit_count() + (gz & x_mask).bit_count()
            if overlap % 2 == 0:
                updated[(x_mask, z_mask)] = updated.get((x_mask, z_mask), 0.0) + coefficient
                continue
            updated[(x_mask, z_mask)] = updated.get((x_mask, z_mask), 0.0) + coefficient * cosine
            phase = (1 + generator.phase + _product_phase(gx, gz, x_mask, z_mask)) % 4
            key = (gx ^ x_mask, gz ^ z_mask)
            updated[key] = updated.get(key, 0.0) + coefficient * sine * _I_POWERS[phase]
        return updated

    def _propagate_hadamard(self, terms, bit: int):
        updated: Dict[Tuple[int, int], complex] = {}
        for (x_mask, z_mask), coefficient in terms.items():
            x_bit, z_bit = (x_mask >> bit) & 1, (z_mask >> bit) & 1
            if x_bit == z_bit:
                key = (x_mask, z_mask)
                if x_bit:
                    coefficient = -coefficient
            else:
                key = (x_mask ^ (1 << bit), z_mask ^ (1 << bit))
            updated[key] = updated.get(key, 0.0) + coefficient
        return updated

    def _propagate_cnot(self, terms, control_bit: int, target_bit: int):
        updated: Dict[Tuple[int, int], complex] = {}
        for (x_mask, z_mask), coefficient in terms.items():
            xc, zc = (x_mask >> control_bit) & 1, (z_mask >> control_bit) & 1
            xt, zt = (x_mask >> target_bit) & 1, (z_mask >> target_bit) & 1
            if xc and zt and (xt ^ zc ^ 1):
                coefficient = -coefficient
            new_x = x_mask ^ (xc << target_bit)
            new_z = z_mask ^ (zt << control_bit)
            updated[(new_x, new_z)] = updated.get((new_x, new_z), 0.0) + coefficient
        return updated

    # RMPS transfer-matrix calculus

    def transition_matrices(self, params: RmpsParams) -> Dict[str, TransitionMatrix]:
        l, chi = params.local_dim, params.chi
        return {
            "identity": TransitionMatrix.identity(l, chi),
            "z": TransitionMatrix.z(l, chi),
            "flip": TransitionMatrix.flip(l, chi),
            "projector": TransitionMatrix.projector(l, chi),
        }

    def rmps_correlator_variance(self, params: RmpsParams, subset_mask: int) -> float:
        """(1 1) prod_r T_r (1 1)^T with T_Z on subset sites and T_identity elsewhere.

        T_Z carries the unit Hilbert-Schmidt normalization Z / sqrt(l), so the value is
        l^{-|S|} E<Z_S>^2 for the Gaussian-closed chain of sample_rmps_state.
        """
        if subset_mask == 0:
            return 0.0
        if subset_mask >= 1 << params.n:
            raise DomainError(f"Subset mask {subset_mask} outside {params.n} sites")
        t_identity = TransitionMatrix.identity(params.local_dim, params.chi).entries
        t_z = TransitionMatrix.z(params.local_dim, params.chi).entries
        row = _ONES.copy()
        for site in range(params.n):
            row = row @ (t_z if (subset_mask >> (params.n - 1 - site)) & 1 else t_identity)
        return float(row @ _ONES)

    def rmps_marginal_variance(self, params: RmpsParams, m: int) -> float:
        """E[Pr(first m sites = 0)^2] = (1 1) T_projector^m T_identity^{n-m} (1 1)^T."""
        if not 1 <= m <= params.n:
            raise DomainError(f"Marginal size {m} outside [1, {params.n}]")
        t_projector = TransitionMatrix.projector(params.local_dim, params.chi).entries
        t_identity = TransitionMatrix.identity(params.local_dim, params.chi).entries
        product = np.linalg.matrix_power(t_projector, m) @ np.linalg.matrix_power(t_identity, params.n - m)
        return float(_ONES @ product @ _ONES)

    def rmps_truncated_prob_variance(self, params: RmpsParams, k: int) -> float:
        """Var of Pr^(k)(0) = 2^{-n} sum_{|S|<=k} <Z_S> over the RMPS ensemble.

        Cross terms between different strings average to zero, so the second moment is
        4^{-n} sum_{|S|<=k} E<Z_S>^2 with E<Z_S>^2 = l^{|S|} times the T_Z contraction.
        The mean is 2^{-n}; at k = 0 only the norm fluctuation of the identity string is left.
        Row vectors are carried per order so the cost is O(n k), not 2^n.
        """
        if not 0 <= k <= params.n:
            raise DomainError(f"Truncation order {k} outside [0, {params.n}]")
        if params.local_dim != 2:
            raise DomainError("Truncated probabilities are defined for qubits only")
        t_identity = TransitionMatrix.identity(params.local_dim, params.chi).entries
        t_pauli_z = params.local_dim * TransitionMatrix.z(params.local_dim, params.chi).entries
        rows = np.zeros((k + 1, 2))
        rows[0] = _ONES
        for _ in range(params.n):
            updated = rows @ t_identity
            updated[1:] += rows[:-1] @ t_pauli_z
            rows = updated
        second_moment = float((rows @ _ONES).sum())
        return (second_moment - 1.0) / 4.0**params.n

    def rmps_renyi2_max(self, params: RmpsParams, k: int) -> float:
        """E Tr(rho_A^2) for the first k sites = (1 1) T_flip^k T_identity^{n-k} (1 1)^T.

        The empty subsystem (k = 0) of a normalized state has purity 1.
        """
        if not 0 <= k <= params.n:
            raise DomainError(f"Subsystem size {k} outside [0, {params.n}]")
        if k == 0:
            return 1.0
        t_flip = TransitionMatrix.flip(params.local_dim, params.chi).entries
        t_identity = TransitionMatrix.identity(params.local_dim, params.chi).entries
        product = np.linalg.matrix_power(t_flip, k) @ np.linalg.matrix_power(t_identity, params.n - k)
        return float(_ONES @ product @ _ONES)

    def sample_rmps_state(self, params: RmpsParams, rng: np.random.Generator) -> np.ndarray:
        """Amplitudes of one sequentially generated MPS with Haar site unitaries.

        Each site applies a Haar unitary on (bond, physical |0>). The final bond is
        contracted with a standard complex Gaussian vector g, so E[g g^+ (x) g g^+] = 1 + F
        and the state is normalized in expectation only.
        """
        l, chi = params.local_dim, params.chi
        psi = np.zeros((1, chi), dtype=np.complex128)
        psi[0, 0] = 1.0
        columns = np.arange(chi) * l
        for _ in range(params.n):
            isometry = unitary_group.rvs(l * chi, random_state=rng)[:, columns]
            psi = (psi @ isometry.T).reshape(-1, chi)
        boundary = (rng.normal(size=chi) + 1j * rng.normal(size=chi)) / np.sqrt(2.0)
        return psi @ boundary

    def sample_rmps_probabilities(self, params: RmpsParams, rng: np.random.Generator) -> np.ndarray:
        """Born weights |<x|psi>|^2 of sample_rmps_state; they sum to the random norm."""
        return np.abs(self.sample_rmps_state(params, rng)) ** 2
