import numpy as np
import pytest

from bornlab.errors import DomainError
from bornlab.models.surrogate import RmpsParams


def test_matchgate_correlator_variance(variance):
    assert variance.matchgate_correlator_variance(2, 1) == pytest.approx(1 / 3)
    assert variance.matchgate_correlator_variance(4, 2) == pytest.approx(6 / 70)
    for k in (0, 4):
        with pytest.raises(DomainError):
            variance.matchgate_correlator_variance(4, k)


def test_matchgate_truncated_variance(variance):
    assert variance.matchgate_truncated_variance(4, 2) == pytest.approx(0.00625)
    assert variance.matchgate_truncated_variance(4, 0) == 0.0


def test_haar_truncation_error(variance):
    mean_sq, bound = variance.haar_truncation_error(3, 1)
    assert mean_sq == pytest.approx(1 / 128)
    assert bound == pytest.approx(0.25)
    assert variance.haar_truncation_error(3, 3) == (0.0, 0.0)
    assert variance.haar_truncation_error_exact(3, 1) == pytest.approx(4 / 576)
    assert variance.haar_truncation_error_exact(4, 4) == 0.0


def test_mc_variance_of_constant_is_zero(variance):
    report = variance.mc_variance(lambda rng: 0.25, draws=10, seed=0, closed_form=0.0)
    assert report.mc_mean == 0.0
    assert report.mc_std_error == 0.0
    assert report.relative_gap == 0.0
    assert report.within()


def test_mc_variance_is_seeded(variance):
    first = variance.mc_variance(lambda rng: rng.normal(), draws=50, seed=3)
    second = variance.mc_variance(lambda rng: rng.normal(), draws=50, seed=3)
    assert first.mc_mean == second.mc_mean
    with pytest.raises(DomainError):
        variance.mc_variance(lambda rng: rng.normal(), draws=1, seed=3)


def test_mc_variance_of_uniform(variance):
    report = variance.mc_variance(lambda rng: rng.uniform(), draws=4000, seed=11, closed_form=1 / 12)
    assert report.within(4.0)
    raw = variance.mc_variance(lambda rng: rng.uniform(), draws=4000, seed=11, closed_form=1 / 3, central=False)
    assert raw.within(4.0)


def test_haar_single_qubit_monte_carlo(variance):
    report = variance.haar_single_qubit_monte_carlo(draws=4000, seed=1)
    assert report.closed_form == pytest.approx(1 / 3)
    assert report.within(4.0)


def test_haar_truncation_monte_carlo(variance):
    report = variance.haar_truncation_monte_carlo(3, 1, draws=4000, seed=2)
    assert report.within(4.0)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_matchgate_monte_carlo(variance, k):
    report = variance.matchgate_monte_carlo(4, k, draws=1000, seed=5)
    assert report.closed_form == pytest.approx(variance.matchgate_correlator_variance(4, k))
    assert report.within(4.0)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_matchgate_truncated_monte_carlo(variance, k):
    report = variance.matchgate_truncated_monte_carlo(4, k, draws=1000, seed=6)
    assert report.closed_form == pytest.approx(variance.matchgate_truncated_variance(4, k))
    assert report.within(4.0)


@pytest.mark.parametrize("n", [3, 4, 6])
def test_matchgate_truncated_variance_grows_with_order(variance, n):
    values = [variance.matchgate_truncated_variance(n, k) for k in range(n + 1)]
    assert all(later >= earlier for earlier, later in zip(values, values[1:]))


def test_rmps_monte_carlo_single_site(variance):
    report = variance.rmps_monte_carlo(RmpsParams(1, 1), "correlator", draws=3000, seed=4, subset_mask=0b1)
    assert report.closed_form == pytest.approx(1 / 3)
    assert report.within(4.0)
    with pytest.raises(DomainError):
        variance.rmps_monte_carlo(RmpsParams(1, 1), "entropy", draws=10, seed=4)


@pytest.mark.parametrize("mask", [0b010, 0b100, 0b101])
def test_rmps_monte_carlo_correlator_finite_bond(variance, mask):
    report = variance.rmps_monte_carlo(RmpsParams(3, 2), "correlator", draws=4000, seed=7, subset_mask=mask)
    if mask == 0b010:
        assert report.closed_form == pytest.approx(0.16133333)
    assert report.within(4.0)


@pytest.mark.parametrize("n, m, chi", [(3, 1, 2), (4, 2, 2), (3, 1, 1)])
def test_rmps_monte_carlo_marginal(variance, n, m, chi):
    report = variance.rmps_monte_carlo(RmpsParams(n, chi), "marginal", draws=4000, seed=1, m=m)
    assert report.within(4.0)


def test_rmps_monte_carlo_truncated_prob(variance):
    report = variance.rmps_monte_carlo(RmpsParams(4, 2), "truncated_prob", draws=4000, seed=8, k=4)
    assert report.closed_form == pytest.approx((2 * 1.2**4 - 1) / 256)
    assert report.within(4.0)
    lower = variance.rmps_monte_carlo(RmpsParams(4, 2), "truncated_prob", draws=2000, seed=8, k=1)
    assert lower.within(4.0)


def test_rmps_monte_carlo_renyi(variance):
    report = variance.rmps_monte_carlo(RmpsParams(3, 2), "renyi2", draws=4000, seed=9, k=1)
    assert report.within(4.0)
    with pytest.raises(DomainError):
        variance.rmps_monte_carlo(RmpsParams(3, 2), "renyi2", draws=10, seed=9, k=0)


def test_rmps_monte_carlo_needs_qubits(variance):
    with pytest.raises(DomainError):
        variance.rmps_monte_carlo(RmpsParams(2, 2, local_dim=3), "marginal", draws=10, seed=1)


def test_scrambling_bound(variance):
    check = variance.scrambling_bound_check(3, 0b100, draws=200, seed=9)
    assert check.bound == pytest.approx(2 / 3)
    assert check.within_bound
    with pytest.raises(DomainError):
        variance.scrambling_bound_check(3, 0b100, draws=50, seed=9)


@pytest.mark.parametrize("size", range(1, 7))
def test_scrambling_bound_on_six_qubits(variance, size):
    mask = (1 << size) - 1
    check = variance.scrambling_bound_check(6, mask, draws=200, seed=10 + size)
    assert check.bound == pytest.approx((2 / 3) ** size)
    assert check.within_bound


def test_scaling_fit(variance):
    ns = np.array([2.0, 4.0, 8.0, 16.0])
    power = variance.scaling_fit(ns, ns**-2.0)
    assert power["loglog_slope"] == pytest.approx(-2.0)
    exponential = variance.scaling_fit(ns, 2.0**-ns)
    assert exponential["loglinear_slope"] == pytest.approx(-np.log(2.0))
    with pytest.raises(DomainError):
        variance.scaling_fit([1.0], [0.5])
