"""Model Hamiltonians, exact ground states and binary dataset ingestion."""

import csv
import logging
import os
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from ..config.settings import Settings, get_settings
from ..errors import ConvergenceError, DatasetError, DomainError, ResourceLimitError
from ..models.circuit import StateVector
from ..models.hamiltonian import BinaryDataset, GroundStateResult, Hamiltonian, HamiltonianModel, LatticeSpec
from ..models.pauli import PauliString
from ..utils.bit_mapper import BitMapper

_I_POWERS = (1.0 + 0j, 1j, -1.0 + 0j, -1j)


class HamiltonianService:
    """Builds the named spin models and diagonalizes them exactly."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()
        self.logger = logging.getLogger(__name__)

    def build_hamiltonian(self, model: HamiltonianModel) -> Hamiltonian:
        """Term list of a named model; zero-coefficient terms are dropped."""
        if model.kind == "tfim":
            return self._tfim(model)
        if model.kind == "heisenberg_alt":
            return self._heisenberg_alt(model)
        if model.kind == "haldane_1d":
            return self._haldane_1d(model)
        return self._haldane_2d(model)

    def _tfim(self, model: HamiltonianModel) -> Hamiltonian:
        n = model.n
        if n < 2:
            raise DomainError(f"TFIM needs n >= 2, got {n}")
        terms = [(-model.J, PauliString.from_sites(n, {i: "X", i + 1: "X"})) for i in range(n - 1)]
        terms += [(-model.h, PauliString.single(n, "Z", i)) for i in range(n)]
        return self._finish(n, terms, {"model": model.as_dict(), "bonds": [[i, i + 1] for i in range(n - 1)]})

    def _heisenberg_alt(self, model: HamiltonianModel) -> Hamiltonian:
        n = model.n
        if n < 2:
            raise DomainError(f"Heisenberg chain needs n >= 2, got {n}")
        terms = []
        for i in range(n - 1):
            # bond i joins sites i+1 and i+2 in 1-based numbering
            coupling = model.J_odd if (i + 1) % 2 == 1 else model.J_even
            for letter in "XYZ":
                terms.append((coupling, PauliString.from_sites(n, {i: letter, i + 1: letter})))
        return self._finish(n, terms, {"model": model.as_dict(), "bonds": [[i, i + 1] for i in range(n - 1)]})

    def _haldane_1d(self, model: HamiltonianModel) -> Hamiltonian:
        n = model.n
        if n < 3:
            raise DomainError(f"Haldane chain needs n >= 3, got {n}")
        triplets = [(i, i + 1, i + 2) for i in range(n - 2)]
        pairs = [(i, i + 1) for i in range(n - 1)]
        return self._haldane_terms(n, model, triplets, pairs)

    def _haldane_2d(self, model: HamiltonianModel) -> Hamiltonian:
        lattice = LatticeSpec.y_periodic(model.nx, model.ny)
        if lattice.n < 3:
            raise DomainError(f"Haldane lattice needs at least 3 sites, got {lattice.n}")
        triplets, pairs = self.lattice_adjacency(lattice)
        return self._haldane_terms(lattice.n, model, triplets, pairs)

    def _haldane_terms(self, n: int, model: HamiltonianModel, triplets, pairs) -> Hamiltonian:
        terms = [(-model.J, PauliString.from_sites(n, {i: "Z", j: "X", k: "Z"})) for i, j, k in triplets]
        terms += [(-model.h1, PauliString.single(n, "X", i)) for i in range(n)]
        terms += [(-model.h2, PauliString.from_sites(n, {i: "X", j: "X"})) for i, j in pairs]
        metadata = {
            "model": model.as_dict(),
            "triplets": [list(t) for t in triplets],
            "pairs": [list(p) for p in pairs],
        }
        return self._finish(n, terms, metadata)

    def lattice_adjacency(self, lattice: LatticeSpec) -> Tuple[List[Tuple[int, int, int]], List[Tuple[int, int]]]:
        """Distinct ZXZ triplets (end, middle, end) and XX pairs of a y-periodic grid.

        A triplet is three distinct sites on a straight line along x or y; the
        middle site carries X. Wrapped duplicates are merged.
        """
        nx, ny = lattice.nx, lattice.ny
        pairs: Dict[frozenset, Tuple[int, int]] = {}
        triplets: Dict[Tuple[int, frozenset], Tuple[int, int, int]] = {}
        for x in range(nx):
            for y in range(ny):
                here = lattice.site(x, y)
                neighbours = []
                if x + 1 < nx:
                    neighbours.append(lattice.site(x + 1, y))
                neighbours.append(lattice.site(x, y + 1))
                for other in neighbours:
                    if other != here:
                        key = frozenset((here, other))
                        pairs.setdefault(key, tuple(sorted((here, other))))
                lines = []
                if 0 < x < nx - 1:
                    lines.append((lattice.site(x - 1, y), lattice.site(x + 1, y)))
                lines.append((lattice.site(x, y - 1), lattice.site(x, y + 1)))
                for left, right in lines:
                    if len({left, here, right}) < 3:
                        continue
                    key = (here, frozenset((left, right)))
                    low, high = sorted((left, right))
                    triplets.setdefault(key, (low, here, high))
        return sorted(triplets.values(), key=lambda t: (t[1], t[0], t[2])), sorted(pairs.values())

    def _finish(self, n: int, terms, metadata: Dict[str, object]) -> Hamiltonian:
        kept = tuple((float(c), p) for c, p in terms if c != 0.0)
        hamiltonian = Hamiltonian(n, kept, metadata)
        self.logger.debug("Built Hamiltonian on %d qubits with %d terms", n, len(kept))
        return hamiltonian

    def to_sparse(self, hamiltonian: Hamiltonian) -> scipy.sparse.csr_matrix:
        """CSR matrix with H[j, j ^ x] = c i^{|x&z|} (-1)^{|(j^x) & z|} per term."""
        n = hamiltonian.n
        idx = BitMapper.basis_indices(n)
        rows, cols, data = [], [], []
        for coefficient, pauli in hamiltonian.terms:
            source = idx ^ pauli.x_mask
            signs = 1 - 2 * (np.bitwise_count(source & pauli.z_mask) & 1).astype(np.float64)
            phase = _I_POWERS[(pauli.x_mask & pauli.z_mask).bit_count() % 4]
            rows.append(idx)
            cols.append(source)
            data.append(coefficient * phase * signs)
        size = 1 << n
        if not data:
            return scipy.sparse.csr_matrix((size, size), dtype=np.complex128)
        matrix = scipy.sparse.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size)
        )
        return matrix.tocsr()

    def apply(self, hamiltonian: Hamiltonian, psi: np.ndarray) -> np.ndarray:
        """Matrix-free H|psi>."""
        idx = BitMapper.basis_indices(hamiltonian.n)
        out = np.zeros_like(psi, dtype=np.complex128)
        for coefficient, pauli in hamiltonian.terms:
            source = idx ^ pauli.x_mask
            signs = 1 - 2 * (np.bitwise_count(source & pauli.z_mask) & 1).astype(np.float64)
            phase = _I_POWERS[(pauli.x_mask & pauli.z_mask).bit_count() % 4]
            out += coefficient * phase * signs * psi[source]
        return out

    def dense(self, hamiltonian: Hamiltonian) -> np.ndarray:
        return self.to_sparse(hamiltonian).toarray()

    def ground_state(self, hamiltonian: Hamiltonian, method: Optional[str] = None) -> GroundStateResult:
        """Lowest eigenpair; dense for small n, Lanczos (eigsh) otherwise.

        Args:
            hamiltonian: the model
            method: force "dense" or "lanczos"; default picks by size
        """
        n = hamiltonian.n
        if n > self.settings.max_eigen_qubits:
            raise ResourceLimitError(f"Eigensolver capped at {self.settings.max_eigen_qubits} qubits, got {n}")
        if method is None:
            method = "dense" if n <= self.settings.dense_eigen_qubits else "lanczos"
        if method == "dense":
            energies, vectors = scipy.linalg.eigh(self.dense(hamiltonian))
            e0, e1 = float(energies[0]), float(energies[1])
            psi = vectors[:, 0]
        elif method == "lanczos":
            e0, e1, psi = self._lanczos(hamiltonian)
        else:
            raise DomainError(f"Unknown eigensolver '{method}'")

        psi = self._fix_phase(psi)
        residual = float(np.linalg.norm(self.apply(hamiltonian, psi) - e0 * psi))
        if residual > 1e-8:
            raise ConvergenceError(f"Ground-state residual {residual:.3e} exceeds 1e-8")
        gap = e1 - e0
        degenerate = gap < 1e-9
        if degenerate:
            self.logger.warning("Ground space of %d-qubit Hamiltonian is degenerate (gap %.3e)", n, gap)
        self.logger.info("Ground state on %d qubits via %s: E0=%.10f gap=%.3e", n, method, e0, gap)
        return GroundStateResult(e0, StateVector(n, psi), degenerate, gap, residual, method)

    def _lanczos(self, hamiltonian: Hamiltonian) -> Tuple[float, float, np.ndarray]:
        size = 1 << hamiltonian.n
        operator = LinearOperator(
            (size, size), matvec=lambda v: self.apply(hamiltonian, v.reshape(-1)), dtype=np.complex128
        )
        start = np.full(size, 1.0 / np.sqrt(size), dtype=np.complex128)
        try:
            energies, vectors = eigsh(operator, k=2, which="SA", v0=start, tol=1e-12, maxiter=size * 20)
        except ArpackNoConvergence as e:
            raise ConvergenceError(f"Lanczos did not converge on {hamiltonian.n} qubits: {e}") from e
        order = np.argsort(energies)
        return float(energies[order[0]]), float(energies[order[1]]), vectors[:, order[0]]

    def _fix_phase(self, psi: np.ndarray) -> np.ndarray:
        psi = np.asarray(psi, dtype=np.complex128)
        psi = psi / np.linalg.norm(psi)
        pivot = int(np.argmax(np.abs(psi)))
        return psi * (abs(psi[pivot]) / psi[pivot])

    def rayleigh_quotient(self, hamiltonian: Hamiltonian, psi: np.ndarray) -> float:
        psi = np.asarray(psi, dtype=np.complex128)
        return float(np.vdot(psi, self.apply(hamiltonian, psi)).real / np.vdot(psi, psi).real)

    def ground_state_distribution(self, model: HamiltonianModel) -> np.ndarray:
        """Born distribution of the model's ground state in the Z basis."""
        result = self.ground_state(self.build_hamiltonian(model))
        probabilities = np.abs(result.state.amplitudes) ** 2
        return probabilities / probabilities.sum()

    def load_binary_csv(self, path: str, columns: Optional[Sequence] = None) -> BinaryDataset:
        """Read a comma-separated 0/1 matrix with an optional header row.

        Args:
            path: CSV file
            columns: optional column names or positions to keep, in order
        """
        if not os.path.exists(path):
            raise FileNotFoundError(f"Dataset not found: {path}")
        with open(path, newline="") as handle:
            raw_rows = [row for row in csv.reader(handle) if row and any(cell.strip() for cell in row)]
        if not raw_rows:
            raise DatasetError(f"Dataset {path} is empty")

        header: Tuple[str, ...] = ()
        first = [cell.strip() for cell in raw_rows[0]]
        if any(cell not in ("0", "1") for cell in first) and not all(self._is_number(c) for c in first):
            header = tuple(first)
            raw_rows = raw_rows[1:]
        if not raw_rows:
            raise DatasetError(f"Dataset {path} has a header but no rows")

        width = len(header) if header else len(raw_rows[0])
        data = np.zeros((len(raw_rows), width), dtype=np.uint8)
        for r, row in enumerate(raw_rows):
            if len(row) != width:
                raise DatasetError(f"Row {r + 1} of {path} has {len(row)} cells, expected {width}")
            for c, cell in enumerate(row):
                value = cell.strip()
                if value not in ("0", "1"):
                    raise DatasetError(f"Non-binary cell '{value}' at row {r + 1}, column {c + 1} of {path}")
                data[r, c] = int(value)

        dataset = BinaryDataset(width, data, header)
        if columns is not None:
            dataset = dataset.select([self._column_position(col, header, width) for col in columns])
        self.logger.info("Loaded %d rows with %d features from %s", dataset.size, dataset.n, path)
        return dataset

    def _column_position(self, column, header: Tuple[str, ...], width: int) -> int:
        if isinstance(column, str):
            if column not in header:
                raise DatasetError(f"Unknown column '{column}'")
            return header.index(column)
        if not 0 <= int(column) < width:
            raise DatasetError(f"Column position {column} outside [0, {width})")
        return int(column)

    @staticmethod
    def _is_number(cell: str) -> bool:
        try:
            float(cell)
        except ValueError:
            return False
        return True
