import pytest

from bornlab.errors import ClosureLimitError, DimensionError, DomainError
from bornlab.models.pauli import OperatorAlgebra, PauliString


def test_single_qubit_products_carry_phase(pauli_algebra):
    x, y, z = (PauliString.from_label(letter) for letter in "XYZ")
    xy = pauli_algebra.pauli_product(x, y)
    assert xy.label == "Z" and xy.phase == 1
    yx = pauli_algebra.pauli_product(y, x)
    assert yx.label == "Z" and yx.phase == 3
    zx = pauli_algebra.pauli_product(z, x)
    assert zx.label == "Y" and zx.phase == 1
    assert pauli_algebra.pauli_product(y, y).is_identity
    assert pauli_algebra.pauli_product(y, y).phase == 0


def test_product_of_two_qubit_strings(pauli_algebra):
    product = pauli_algebra.pauli_product(PauliString.from_label("XZ"), PauliString.from_label("ZX"))
    # (XZ)(ZX) = (XZ) (x) (ZX) = (-iY) (x) (iY)
    assert product.label == "YY"
    assert product.phase == 0


def test_commutator_none_when_commuting(pauli_algebra):
    assert pauli_algebra.commutator(PauliString.from_label("XX"), PauliString.from_label("ZZ")) is None
    result = pauli_algebra.commutator(PauliString.from_label("XI"), PauliString.from_label("ZI"))
    assert result.label == "YI"


def test_product_rejects_mismatched_sizes(pauli_algebra):
    with pytest.raises(DimensionError):
        pauli_algebra.pauli_product(PauliString.from_label("X"), PauliString.from_label("XX"))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_matchgate_closure_dimension(pauli_algebra, n):
    closure = pauli_algebra.lie_closure(pauli_algebra.named_generators("matchgate", n))
    assert closure.dimension == n * (2 * n - 1)
    assert closure.basis == pauli_algebra.named_dla("matchgate", n).basis


@pytest.mark.parametrize("n,expected", [(3, 12), (4, 60), (5, 252)])
def test_haldane_closure_matches_explicit_basis(pauli_algebra, n, expected):
    closure = pauli_algebra.lie_closure(pauli_algebra.named_generators("haldane", n))
    explicit = pauli_algebra.named_dla("haldane", n)
    assert closure.dimension == expected
    assert explicit.dimension == expected
    assert closure.basis == explicit.basis


@pytest.mark.parametrize("n,expected", [(2, 3), (3, 15), (4, 60), (5, 255)])
def test_heisenberg_closure_dimension(pauli_algebra, n, expected):
    closure = pauli_algebra.lie_closure(pauli_algebra.named_generators("heisenberg", n))
    assert closure.dimension == expected
    assert closure.basis == pauli_algebra.named_dla("heisenberg", n).basis


def test_explicit_algebras_are_closed(pauli_algebra):
    for kind in ("matchgate", "heisenberg", "haldane"):
        assert pauli_algebra.named_dla(kind, 4).is_closed()


def test_closure_limit_keeps_partial_algebra(pauli_algebra):
    with pytest.raises(ClosureLimitError) as info:
        pauli_algebra.lie_closure(pauli_algebra.named_generators("haldane", 3), max_dim=5)
    assert info.value.partial is not None
    assert info.value.partial.dimension > 5


def test_closure_skips_identity_and_duplicates(pauli_algebra):
    generators = [PauliString.from_label("II"), PauliString.from_label("XI"), PauliString.from_label("XI")]
    closure = pauli_algebra.lie_closure(generators)
    assert closure.labels() == ["XI"]


def test_unknown_or_small_algebras_rejected(pauli_algebra):
    with pytest.raises(DomainError):
        pauli_algebra.named_dla("su2", 3)
    with pytest.raises(DomainError):
        pauli_algebra.named_generators("haldane", 2)
    with pytest.raises(DomainError):
        pauli_algebra.named_dla("heisenberg", 1)


def test_two_qubit_heisenberg_algebra(pauli_algebra):
    algebra = pauli_algebra.named_dla("heisenberg", 2)
    assert algebra.labels() == ["XX", "YY", "ZZ"]
    assert algebra.is_closed()


def test_intersection_and_text(pauli_algebra):
    a = OperatorAlgebra.from_labels(["XI", "ZI", "YI"])
    b = OperatorAlgebra.from_labels(["ZI", "IZ"])
    common = pauli_algebra.algebra_intersection(a, b)
    assert common.to_text() == "ZI"
    assert a.to_text() == "XI\nYI\nZI"


def test_haldane_basis_excludes_conserved_strings(pauli_algebra):
    algebra = pauli_algebra.named_dla("haldane", 4)
    for label in ("XXXX", "IXIX", "XIXI", "IIII"):
        assert PauliString.from_label(label) not in algebra
    assert PauliString.from_label("ZXZI") in algebra
