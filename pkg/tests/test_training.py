import numpy as np
import pytest

from bornlab.errors import DimensionError, DomainError
from bornlab.models.circuit import AnsatzSpec
from bornlab.models.fourier import CorrelatorVector, TruncationSpec
from bornlab.models.training import KernelSpec, LossSpec, TrainConfig
from bornlab.services.training_service import AdamOptimizer, SgdOptimizer

from .conftest import random_distribution


@pytest.fixture
def ansatz(statevector):
    return statevector.build_ansatz(AnsatzSpec("strongly_entangling", 2, layers=1))


@pytest.fixture
def iqp_ansatz(statevector):
    return statevector.build_ansatz(AnsatzSpec("iqp", 3, gate_count=5, seed=2))


def born(statevector, circuit, theta):
    return statevector.born_distribution(statevector.simulate(circuit, theta))


def test_optimizers_step():
    theta = np.array([1.0, -1.0])
    grad = np.array([0.5, -2.0])
    np.testing.assert_allclose(SgdOptimizer(0.1).step(theta, grad), [0.95, -0.8])
    # the first Adam step moves each coordinate by about the learning rate
    np.testing.assert_allclose(AdamOptimizer(0.1).step(theta, grad), [0.9, -0.9], atol=1e-6)


def test_zero_iterations_keeps_initial_point(training, ansatz, rng):
    target = random_distribution(rng, 2)
    result = training.train(ansatz, target, LossSpec.sqe(), TrainConfig(iterations=0, seed=3))
    assert len(result.loss_history) == 1
    np.testing.assert_array_equal(result.theta_star, result.theta_initial)


def test_self_target_stays_at_zero_loss(training, statevector, ansatz):
    theta0 = np.linspace(0.2, 1.7, ansatz.param_count)
    target = born(statevector, ansatz, theta0)
    config = TrainConfig(iterations=5, optimizer="sgd", learning_rate=0.1)
    result = training.train(ansatz, target, LossSpec.sqe(), config, theta_init=theta0)
    assert max(result.loss_history) == pytest.approx(0.0, abs=1e-20)
    np.testing.assert_allclose(result.theta_star, theta0, atol=1e-12)
    assert training.deploy_evaluate(ansatz, result.theta_star, target) == pytest.approx(0.0, abs=1e-9)


def test_parameter_shift_matches_finite_difference(training, ansatz, rng):
    target = random_distribution(rng, 2)
    loss = LossSpec.mmd(KernelSpec.gaussian(1.0))
    theta0 = rng.uniform(0.0, 2 * np.pi, size=ansatz.param_count)
    common = dict(iterations=1, optimizer="sgd", learning_rate=0.1, truncation=TruncationSpec.k_order(1))
    shifted = training.train(ansatz, target, loss, TrainConfig(gradient="parameter_shift", **common), theta0)
    finite = training.train(
        ansatz, target, loss, TrainConfig(gradient="finite_difference", fd_step=1e-5, **common), theta0
    )
    np.testing.assert_allclose(shifted.theta_star, finite.theta_star, atol=1e-7)


def test_training_lowers_loss(training, statevector, ansatz):
    target = born(statevector, ansatz, np.linspace(0.3, 2.4, ansatz.param_count))
    config = TrainConfig(iterations=40, learning_rate=0.1, seed=1)
    result = training.train(ansatz, target, LossSpec.sqe(), config)
    assert len(result.loss_history) == 41
    assert result.final_loss < result.initial_loss
    assert result.metadata["loss"] == {"kind": "sqe"}


def test_training_is_deterministic(training, ansatz, rng):
    target = random_distribution(rng, 2)
    config = TrainConfig(iterations=6, seed=12, batch=2, truncation=TruncationSpec.k_order(1))
    loss = LossSpec.mmd(KernelSpec.gaussian(1.0))
    first = training.train(ansatz, target, loss, config)
    second = training.train(ansatz, target, loss, config)
    assert first.loss_history == second.loss_history
    assert len(first.loss_history) == 7
    np.testing.assert_array_equal(first.theta_star, second.theta_star)


def test_invalid_loss_and_truncation_pairs(training, ansatz):
    target = np.full(4, 0.25)
    with pytest.raises(DomainError):
        training.train(ansatz, target, LossSpec.kl(), TrainConfig(iterations=1, truncation=TruncationSpec.k_order(1)))
    with pytest.raises(DomainError):
        training.train(ansatz, target, LossSpec.emd(), TrainConfig(iterations=1, batch=2))
    with pytest.raises(DimensionError):
        training.train(ansatz, np.full(8, 0.125), LossSpec.sqe(), TrainConfig(iterations=1))


def test_kl_training_on_full_model(training, ansatz, rng):
    target = random_distribution(rng, 2)
    result = training.train(ansatz, target, LossSpec.kl(), TrainConfig(iterations=3, seed=4))
    assert len(result.loss_history) == 4
    assert all(value >= 0 for value in result.loss_history)


@pytest.mark.parametrize("surrogate", ["iqp_pps", "pauli_prop"])
def test_surrogate_evaluators_match_statevector(training, iqp_ansatz, rng, surrogate):
    theta = rng.uniform(0.0, 2 * np.pi, size=iqp_ansatz.param_count)
    truncation = TruncationSpec.k_order(2)
    exact = training.evaluator(iqp_ansatz, TrainConfig(truncation=truncation))
    approx = training.evaluator(iqp_ansatz, TrainConfig(truncation=truncation, surrogate=surrogate))
    np.testing.assert_allclose(approx.distribution(theta), exact.distribution(theta), atol=1e-10)
    xs = np.array([0, 3, 6])
    np.testing.assert_allclose(approx.values_at(theta, xs), exact.distribution(theta)[xs], atol=1e-10)


def test_mse_k(training):
    exact = CorrelatorVector(2, {0: 1.0, 0b01: 0.3, 0b10: -0.2, 0b11: 0.5})
    approx = CorrelatorVector(2, {0: 1.0, 0b01: 0.4, 0b10: -0.2, 0b11: 0.5})
    assert training.mse_k(exact, approx, 1) == pytest.approx(0.005)
    assert training.mse_k(exact, approx, 2) == 0.0


def test_init_from_data(training, statevector):
    ansatz = statevector.build_ansatz(AnsatzSpec("iqp", 2, gate_count=3, seed=0))
    point = np.zeros(4)
    point[0b11] = 1.0
    np.testing.assert_allclose(training.init_from_data(ansatz, point), [1.0, 1.0, 1.0])
    np.testing.assert_allclose(training.init_from_data(ansatz, np.full(4, 0.25)), [0.5, 0.5, 0.25])


def test_discrepancy_of_identical_models(training, ansatz, rng):
    target = random_distribution(rng, 2)
    result = training.train(ansatz, target, LossSpec.sqe(), TrainConfig(iterations=0, seed=5))
    report = training.discrepancy_report(target, ansatz, result, result)
    assert report.norm_feature_gap == pytest.approx(0.0, abs=1e-12)
    assert report.norm_surrogate_mismatch == pytest.approx(0.0, abs=1e-12)
    assert report.risk_gap == pytest.approx(0.0, abs=1e-12)
    assert report.bound_satisfied
    assert report.alignment_deviation == pytest.approx(0.0, abs=1e-9)


def test_discrepancy_bound_holds_for_truncated_surrogate(training, ansatz, rng):
    target = random_distribution(rng, 2)
    loss = LossSpec.mmd(KernelSpec.gaussian(1.0))
    classical = training.train(
        ansatz, target, loss, TrainConfig(iterations=10, seed=6, truncation=TruncationSpec.k_order(1))
    )
    quantum = training.train(ansatz, target, loss, TrainConfig(iterations=10, seed=7))
    report = training.discrepancy_report(target, ansatz, classical, quantum)
    assert report.bound_satisfied
    assert 0.0 < report.c_max <= 1.0
    gaps = report.norm_feature_gap + report.norm_surrogate_mismatch
    # the target-weighted constant never exceeds the plain Euclidean one
    assert report.constant_c <= report.constant_c_unweighted + 1e-12
    assert report.risk_gap <= report.constant_c_unweighted * gaps + 1e-12
    assert report.as_dict()["constant_c_unweighted"] == report.constant_c_unweighted
