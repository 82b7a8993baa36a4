"""Pauli arithmetic, Lie closures and the named dynamical Lie algebras."""

import logging
from itertools import product
from typing import Dict, List, Optional, Sequence, Set, Tuple

from ..errors import ClosureLimitError, DimensionError, DomainError
from ..models.pauli import OperatorAlgebra, PauliString

DLA_KINDS = ("matchgate", "heisenberg", "haldane")


def _product_phase(x1: int, z1: int, x2: int, z2: int) -> int:
    """Exponent g with sigma(x1,z1) sigma(x2,z2) = i^g sigma(x1^x2, z1^z2), summed over qubits."""
    y1 = x1 & z1
    xo1 = x1 & ~z1
    zo1 = z1 & ~x1
    y2 = x2 & z2
    xo2 = x2 & ~z2
    zo2 = z2 & ~x2
    return (
        (y1 & zo2).bit_count()
        - (y1 & xo2).bit_count()
        - (xo1 & zo2).bit_count()
        + (xo1 & y2).bit_count()
        + (zo1 & xo2).bit_count()
        - (zo1 & y2).bit_count()
    )


class PauliAlgebraService:
    """Symplectic Pauli arithmetic and Lie-algebra construction."""

    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def pauli_product(self, a: PauliString, b: PauliString) -> PauliString:
        """Return a*b with exact phase."""
        if a.n != b.n:
            raise DimensionError(f"Cannot multiply Pauli strings on {a.n} and {b.n} qubits")
        phase = a.phase + b.phase + _product_phase(a.x_mask, a.z_mask, b.x_mask, b.z_mask)
        return PauliString(a.n, a.x_mask ^ b.x_mask, a.z_mask ^ b.z_mask, phase)

    def commutator(self, a: PauliString, b: PauliString) -> Optional[PauliString]:
        """Return [a, b] / 2 as a phased string, or None when a and b commute.

        For anticommuting strings [a, b] = 2ab.
        """
        if a.commutes_with(b):
            return None
        return self.pauli_product(a, b)

    def lie_closure(
        self, generators: Sequence[PauliString], max_dim: Optional[int] = None
    ) -> OperatorAlgebra:
        """Smallest commutator-closed Pauli basis containing the generators.

        Args:
            generators: Pauli strings sharing one qubit count
            max_dim: abort once the basis grows past this size (default 4^n)

        Raises:
            ClosureLimitError: carrying the partial algebra when max_dim is exceeded
        """
        generators = list(generators)
        if not generators:
            raise DomainError("Lie closure needs at least one generator")
        n = generators[0].n
        for generator in generators:
            if generator.n != n:
                raise DimensionError(f"Generator {generator} acts on {generator.n} qubits, expected {n}")
        if max_dim is None:
            max_dim = 4**n
        if max_dim < 1:
            raise DomainError(f"max_dim must be >= 1, got {max_dim}")

        basis: List[Tuple[int, int]] = []
        seen: Set[Tuple[int, int]] = set()
        worklist: List[Tuple[int, int]] = []
        for generator in generators:
            if generator.is_identity:
                continue
            if generator.key not in seen:
                seen.add(generator.key)
                worklist.append(generator.key)

        def partial_algebra() -> OperatorAlgebra:
            return OperatorAlgebra(n, frozenset(PauliString(n, x, z) for x, z in seen), tuple(generators))

        while worklist:
            x_new, z_new = worklist.pop()
            for x_old, z_old in basis:
                overlap = (x_new & z_old).bit_count() + (z_new & x_old).bit_count()
                if overlap % 2 == 0:
                    continue
                key = (x_new ^ x_old, z_new ^ z_old)
                if key in seen:
                    continue
                seen.add(key)
                worklist.append(key)
                if len(seen) > max_dim:
                    raise ClosureLimitError(
                        f"Lie closure exceeded max_dim={max_dim} on {n} qubits", partial=partial_algebra()
                    )
            basis.append((x_new, z_new))

        self.logger.debug("Lie closure of %d generators on %d qubits: dimension %d", len(generators), n, len(seen))
        return partial_algebra()

    def named_generators(self, kind: str, n: int) -> List[PauliString]:
        """Gate generators of the matchgate, Heisenberg and Haldane circuits."""
        self._check_kind(kind, n)
        if kind == "matchgate":
            return self.matchgate_generators(n)
        if kind == "heisenberg":
            return [
                PauliString.from_sites(n, {i: letter, i + 1: letter}) for letter in "XYZ" for i in range(n - 1)
            ]
        triplets = [PauliString.from_sites(n, {i: "Z", i + 1: "X", i + 2: "Z"}) for i in range(n - 2)]
        fields = [PauliString.single(n, "X", i) for i in range(n)]
        pairs = [PauliString.from_sites(n, {i: "X", i + 1: "X"}) for i in range(n - 1)]
        return triplets + fields + pairs

    def matchgate_generators(self, n: int) -> List[PauliString]:
        """Nearest-neighbour XX couplings and single-qubit Z fields."""
        couplings = [PauliString.from_sites(n, {i: "X", i + 1: "X"}) for i in range(n - 1)]
        fields = [PauliString.single(n, "Z", i) for i in range(n)]
        return couplings + fields

    def named_dla(self, kind: str, n: int) -> OperatorAlgebra:
        """Build the algebra from its explicit basis description, without closure."""
        self._check_kind(kind, n)
        if kind == "matchgate":
            strings = self._matchgate_basis(n)
        elif kind == "heisenberg":
            strings = self._heisenberg_basis(n)
        else:
            strings = self._haldane_basis(n)
        algebra = OperatorAlgebra.from_strings(n, strings, self.named_generators(kind, n))
        self.logger.debug("Explicit %s algebra on %d qubits: dimension %d", kind, n, algebra.dimension)
        return algebra

    def algebra_intersection(self, a: OperatorAlgebra, b: OperatorAlgebra) -> OperatorAlgebra:
        if a.n != b.n:
            raise DimensionError(f"Cannot intersect algebras on {a.n} and {b.n} qubits")
        return OperatorAlgebra(a.n, a.basis & b.basis, a.provenance + b.provenance)

    def _check_kind(self, kind: str, n: int):
        if kind not in DLA_KINDS:
            raise DomainError(f"Unknown algebra '{kind}', expected one of {DLA_KINDS}")
        minimum = 3 if kind == "haldane" else 2
        if n < minimum:
            raise DomainError(f"{kind} algebra needs n >= {minimum}, got {n}")

    def _matchgate_basis(self, n: int) -> List[PauliString]:
        strings = [PauliString.single(n, "Z", i) for i in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                for left, right in product("XY", repeat=2):
                    sites: Dict[int, str] = {q: "Z" for q in range(i + 1, j)}
                    sites[i] = left
                    sites[j] = right
                    strings.append(PauliString.from_sites(n, sites))
        return strings

    def _heisenberg_basis(self, n: int) -> List[PauliString]:
        # on two qubits XX, YY and ZZ are the generators themselves
        excluded = {letter * n for letter in "XYZ"} if n > 2 else set()
        strings = []
        for letters in product("IXYZ", repeat=n):
            label = "".join(letters)
            counts = [label.count(letter) % 2 for letter in "XYZ"]
            if counts[0] == counts[1] == counts[2] and label != "I" * n and label not in excluded:
                strings.append(PauliString.from_label(label))
        return strings

    def _haldane_basis(self, n: int) -> List[PauliString]:
        x_odd_sites = "".join("X" if q % 2 == 1 else "I" for q in range(n))
        x_even_sites = "".join("X" if q % 2 == 0 else "I" for q in range(n))
        excluded = {"I" * n, "X" * n, x_odd_sites, x_even_sites}
        strings = []
        for letters in product("IXYZ", repeat=n):
            label = "".join(letters)
            flips_even = sum(1 for q in range(0, n, 2) if label[q] in "YZ")
            flips_odd = sum(1 for q in range(1, n, 2) if label[q] in "YZ")
            if flips_even % 2 == 0 and flips_odd % 2 == 0 and label not in excluded:
                strings.append(PauliString.from_label(label))
        return strings
