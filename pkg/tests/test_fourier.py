from math import comb

import numpy as np
import pytest
from scipy.linalg import hadamard

from bornlab.errors import DimensionError, DomainError, MissingCorrelatorError
from bornlab.models.fourier import CorrelatorVector, TruncationSpec
from bornlab.utils.bit_mapper import BitMapper
from bornlab.utils.walsh_transform import WalshTransform

from .conftest import random_distribution


def test_fwht_matches_sylvester_hadamard(rng):
    values = rng.normal(size=8)
    np.testing.assert_allclose(WalshTransform.fwht(values), hadamard(8) @ values, atol=1e-12)


def test_full_reconstruction_recovers_distribution(fourier, rng):
    p = random_distribution(rng, 4)
    c = fourier.decompose(p)
    assert c[0] == 1.0
    assert len(c) == 16
    np.testing.assert_allclose(fourier.reconstruct(c, TruncationSpec.full()).values, p, atol=1e-12)


def test_ghz_low_order_truncations(fourier, statevector, ghz3):
    p = statevector.born_distribution(ghz3)
    first = fourier.truncated_distribution(p, TruncationSpec.k_order(1))
    np.testing.assert_allclose(first.values, np.full(8, 1 / 8), atol=1e-12)
    second = fourier.truncated_distribution(p, TruncationSpec.k_order(2)).values
    assert second[0] == pytest.approx(0.5)
    assert second[7] == pytest.approx(0.5)
    np.testing.assert_allclose(second[1:7], 0.0, atol=1e-12)


def test_truncation_can_go_negative(fourier):
    p = np.zeros(8)
    p[0] = 1.0
    first = fourier.truncated_distribution(p, TruncationSpec.k_order(1))
    assert first.values[7] == pytest.approx(-0.25)
    assert not first.is_proper
    assert first.values.sum() == pytest.approx(1.0)


def test_rfc_truncation_keeps_chosen_subsets(fourier):
    p = np.zeros(4)
    p[0] = 1.0
    rfc = fourier.truncated_distribution(p, TruncationSpec.rfc({0b11}))
    # only <Z1 Z2> = 1 survives: mass splits over the even-parity strings
    np.testing.assert_allclose(rfc.values, [0.5, 0.0, 0.0, 0.5], atol=1e-12)


def test_reconstruct_at_matches_dense(fourier, rng):
    p = random_distribution(rng, 4)
    c = fourier.decompose(p)
    trunc = TruncationSpec.k_order(2)
    dense = fourier.reconstruct(c, trunc).values
    xs = [0, 3, 9, 15]
    np.testing.assert_allclose(fourier.reconstruct_at(c, trunc, xs), dense[xs], atol=1e-12)


def test_missing_correlator_raises(fourier):
    c = CorrelatorVector(2, {0: 1.0, 0b10: 0.2})
    with pytest.raises(MissingCorrelatorError):
        fourier.reconstruct(c, TruncationSpec.k_order(1))


def test_empty_set_correlator_must_be_one():
    with pytest.raises(DomainError):
        CorrelatorVector(2, {0: 0.5})


def test_marginal_of_ghz(fourier, statevector, ghz3):
    p = statevector.born_distribution(ghz3)
    np.testing.assert_allclose(fourier.marginal(p, [0]), [0.5, 0.5], atol=1e-12)
    np.testing.assert_allclose(fourier.marginal(p, [0, 2]), [0.5, 0.0, 0.0, 0.5], atol=1e-12)


def test_marginal_matches_direct_sum(fourier, rng):
    p = random_distribution(rng, 3)
    direct = p.reshape(2, 2, 2).sum(axis=1).reshape(-1)
    np.testing.assert_allclose(fourier.marginal(p, [0, 2]), direct, atol=1e-12)


def test_distribution_validation(fourier):
    with pytest.raises(DimensionError):
        fourier.decompose(np.full(3, 1 / 3))
    with pytest.raises(DomainError):
        fourier.decompose(np.array([0.5, 0.6, 0.0, 0.0]))


def test_correlation_spectrum_groups_by_order(fourier, rng):
    spectrum = fourier.correlation_spectrum(random_distribution(rng, 4))
    assert [len(spectrum[k]) for k in range(5)] == [comb(4, k) for k in range(5)]
    assert spectrum[0] == [(0, pytest.approx(1.0))]


def test_empirical_correlators_modes(fourier):
    zeros = np.zeros((50, 3), dtype=np.uint8)
    estimates, variances = fourier.empirical_correlators(zeros, [0b100, 0b111])
    np.testing.assert_allclose(estimates, [1.0, 1.0])
    np.testing.assert_allclose(variances, [0.0, 0.0])

    rows = np.array([[1, 1, 0], [1, 0, 0], [1, 1, 1], [0, 1, 1]], dtype=np.uint8)
    estimates, variances = fourier.empirical_correlators(rows, [0b110], mode="s_product")
    assert estimates[0] == pytest.approx(0.5)
    assert variances[0] == pytest.approx(0.25 / 4)
    _, inflated = fourier.empirical_correlators(rows, [0b110], mode="s_product", gamma=0.1)
    assert inflated[0] == pytest.approx(0.25 / 4 * 1.3)
    with pytest.raises(DomainError):
        fourier.empirical_correlators(rows, [0b110], mode="median")


def test_rfc_sample_policies(fourier):
    uniform = fourier.rfc_sample(5, "uniform_up_to", 8, seed=2, k_max=2)
    subsets = uniform.subsets(5)
    assert len(subsets) == 8 and subsets[0] == 0
    assert all(BitMapper.popcount(m) <= 2 for m in subsets)
    assert fourier.rfc_sample(5, "uniform_up_to", 8, seed=2, k_max=2) == uniform
    bernoulli = fourier.rfc_sample(4, "bernoulli", 6, seed=0, prob=0.5)
    assert bernoulli.size(4) == 6
    with pytest.raises(DomainError):
        fourier.rfc_sample(3, "uniform_up_to", 5, seed=0, k_max=1)


def test_parity_kernel_with_all_subsets_is_identity(fourier):
    np.testing.assert_allclose(fourier.parity_kernel_matrix(3, range(8)), np.eye(8), atol=1e-12)
    assert fourier.parity_kernel(0b101, 0b101, [0, 1, 2], 3) == pytest.approx(3 / 8)
    assert fourier.parity_kernel(0b001, 0b000, [0, 1], 3) == pytest.approx(0.0)
