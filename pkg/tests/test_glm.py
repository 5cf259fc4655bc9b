import math

import mpmath
import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from hypothesis import given, settings, strategies as st

from rifkit.dataset import Dataset, SyntheticSpec, synthesize
from rifkit.glm import (ModelSpec, SolverError, accuracy, fit, losses, model_from_json, model_to_json,
                        per_sample_gradient, per_sample_hessian_factor, total_loss, hessian_matrix)
from conftest import central_gradient, central_hessian, logistic_instance


def _loss_i(family, x, y, theta):
    return float(losses(family, x[None, :], np.array([y]), theta)[0])


class TestTotalLoss:
    def test_zero_theta_is_n_log2(self):
        data = synthesize(SyntheticSpec(n=60, d=4, seed=1))
        assert total_loss(np.zeros(4), data, spec=ModelSpec("logistic", 3.0)) == pytest.approx(
            data.n * math.log(2), rel=1e-14)

    def test_regularizer_only(self):
        data = synthesize(SyntheticSpec(n=60, d=4, seed=1))
        theta = np.array([2.5, 0, 0, 0])
        assert total_loss(theta, data, np.zeros(data.n), ModelSpec("logistic", 0.3)) == pytest.approx(
            0.15 * 2.5 ** 2, rel=1e-15)

    @pytest.mark.parametrize("family", ["logistic", "least-squares"])
    def test_high_precision_oracle(self, family):
        rng = np.random.default_rng(4)
        data = synthesize(SyntheticSpec(n=40, d=5, seed=2, label_model="logistic"))
        theta = rng.normal(size=5)
        w = rng.uniform(size=data.n)
        lam = 0.7
        mpmath.mp.dps = 40
        acc = mpmath.mpf(0)
        for x, y, wi in zip(data.features, data.labels, w):
            z = mpmath.fsum(mpmath.mpf(a) * mpmath.mpf(b) for a, b in zip(x, theta))
            if family == "logistic":
                ell = mpmath.log(1 + mpmath.exp(z)) - mpmath.mpf(y) * z
            else:
                ell = (z - mpmath.mpf(y)) ** 2 / 2
            acc += mpmath.mpf(wi) * ell
        acc += mpmath.mpf(lam) / 2 * mpmath.fsum(mpmath.mpf(t) ** 2 for t in theta)
        got = total_loss(theta, data, w, ModelSpec(family, lam))
        assert got == pytest.approx(float(acc), rel=1e-12)

    def test_dimension_mismatch(self):
        data = synthesize(SyntheticSpec(n=20, d=3, seed=1))
        with pytest.raises(ValueError):
            total_loss(np.zeros(4), data, spec=ModelSpec())

    def test_extreme_margin_is_finite(self):
        data = Dataset(np.array([[1.0], [-1.0]]), np.array([0.0, 1.0]))
        assert math.isfinite(total_loss(np.array([800.0]), data, spec=ModelSpec()))


class TestPerSample:
    def test_logistic_gradient_at_zero(self):
        data = synthesize(SyntheticSpec(n=20, d=3, seed=1))
        i = int(np.flatnonzero(data.labels == 1)[0])
        assert_allclose(per_sample_gradient(np.zeros(3), data, i), -0.5 * data.features[i])

    def test_interpolated_sample(self):
        X = np.array([[1.0, 2.0], [0.5, -1.0]])
        theta = np.array([0.3, -0.2])
        data = Dataset(X, X @ theta, binary=False)
        assert_array_equal(per_sample_gradient(theta, data, 0, "least-squares"), 0.0)

    def test_index_out_of_range(self):
        data = synthesize(SyntheticSpec(n=20, d=3, seed=1))
        with pytest.raises(IndexError):
            per_sample_gradient(np.zeros(3), data, data.n)

    def test_sigma_at_zero(self):
        data = synthesize(SyntheticSpec(n=20, d=3, seed=1))
        assert per_sample_hessian_factor(np.zeros(3), data, 0)[0] == 0.25

    def test_saturated_sigma(self):
        data = Dataset(np.array([[1.0], [2.0]]), np.array([1.0, 0.0]))
        assert per_sample_hessian_factor(np.array([30.0]), data, 0)[0] < 1e-12

    def test_least_squares_sigma(self):
        data = Dataset(np.array([[1.0], [2.0]]), np.array([0.3, 0.1]), binary=False)
        assert per_sample_hessian_factor(np.array([5.0]), data, 1, "least-squares") == (1.0, pytest.approx([2.0]))

    @pytest.mark.parametrize("family", ["logistic", "least-squares"])
    def test_finite_differences(self, family):
        data = synthesize(SyntheticSpec(n=30, d=6, seed=3))
        rng = np.random.default_rng(0)
        for _ in range(20):
            theta = rng.normal(size=6)
            i = int(rng.integers(data.n))
            x, y = data.features[i], data.labels[i]
            g = per_sample_gradient(theta, data, i, family)
            fd = central_gradient(lambda t: _loss_i(family, x, y, t), theta)
            assert np.linalg.norm(g - fd) <= 1e-6 * np.linalg.norm(g)
            sigma, xv = per_sample_hessian_factor(theta, data, i, family)
            Hfd = central_hessian(lambda t: per_sample_gradient(t, data, i, family), theta)
            assert np.max(np.abs(sigma * np.outer(xv, xv) - Hfd)) <= 1e-5


class TestFit:
    def test_symmetric_pair(self):
        data = Dataset(np.array([[1.0], [1.0]]), np.array([1.0, 0.0]))
        model = fit(data, ModelSpec("logistic", 0.1))
        assert abs(model.theta[0]) < 1e-12

    def test_ridge_closed_form(self, small_ridge):
        data, model = small_ridge
        X, y = data.features, data.labels
        closed = np.linalg.solve(X.T @ X + model.spec.lam * np.eye(data.d), X.T @ y)
        assert_allclose(model.theta, closed, rtol=1e-8)

    def test_warm_start_agrees(self, small_logistic):
        data, model = small_logistic
        rng = np.random.default_rng(1)
        warm = fit(data, model.spec, warm_start=model.theta + 0.5 * rng.normal(size=data.d))
        assert np.linalg.norm(warm.theta - model.theta) <= 1e-8

    def test_converged(self, small_logistic):
        data, model = small_logistic
        g0 = np.linalg.norm(data.features.T @ (0.5 - data.labels))
        assert model.grad_norm <= 1e-10 * max(1.0, g0)

    def test_global_optimality(self, small_logistic):
        data, model = small_logistic
        rng = np.random.default_rng(2)
        best = total_loss(model, data)
        for _ in range(1000):
            v = rng.normal(size=data.d)
            v *= rng.uniform() / np.linalg.norm(v)
            assert total_loss(model.theta + v, data, spec=model.spec) >= best

    def test_hessian_reconstruction(self, small_logistic):
        data, model = small_logistic
        H = hessian_matrix("logistic", data.features, model.theta, np.ones(data.n), model.spec.lam)
        assert np.linalg.norm(model.hessian - H) <= 1e-10 * np.linalg.norm(H)

    def test_weighted_fit_matches_dropped_rows(self, small_logistic):
        data, model = small_logistic
        w = np.ones(data.n)
        w[[3, 7, 11]] = 0
        a = fit(data, model.spec, weights=w)
        keep = np.flatnonzero(w)
        b = fit(data.subset(keep), model.spec)
        assert_allclose(a.theta, b.theta, atol=1e-9)

    def test_singular_hessian(self):
        X = np.zeros((3, 2))
        X[:, 0] = 1.0
        data = Dataset(X, np.array([0.5, 1.0, 2.0]), binary=False)
        with pytest.raises(SolverError):
            fit(data, ModelSpec("least-squares", 0.0))

    def test_nonconvergence_carries_grad_norm(self, small_logistic):
        data, model = small_logistic
        with pytest.raises(SolverError) as info:
            fit(data, model.spec, max_iter=1)
        assert info.value.grad_norm > 0

    def test_bad_weights(self, small_logistic):
        data, model = small_logistic
        with pytest.raises(ValueError):
            fit(data, model.spec, weights=np.full(data.n, 2.0))

    def test_accuracy_of_zero_model_is_balance(self, small_logistic):
        from rifkit.glm import FittedModel
        data, model = small_logistic
        zero = FittedModel(np.zeros(data.d), model.spec, model.weights, 0.0)
        # every prediction is exactly 1/2, which counts as class 1
        assert accuracy(zero, data) == data.test_labels.mean()

    def test_well_separated_accuracy(self):
        data = synthesize(SyntheticSpec(n=2000, d=50, signal=10.0, seed=3))
        assert accuracy(fit(data, ModelSpec("logistic", 1e-3)), data) > 0.9


class TestSerialization:
    def test_round_trip(self, small_logistic):
        data, model = small_logistic
        back = model_from_json(model_to_json(model), data)
        assert_array_equal(back.theta, model.theta)
        assert back.spec == model.spec
        assert_allclose(back.hessian, model.hessian, rtol=1e-14)

    def test_factor_not_serialized(self, small_logistic):
        _, model = small_logistic
        assert "chol" not in model_to_json(model)

    def test_dimension_check(self, small_logistic):
        data, model = small_logistic
        other = synthesize(SyntheticSpec(n=50, d=3, seed=0))
        with pytest.raises(ValueError):
            model_from_json(model_to_json(model), other)


class TestStrictConvexity:
    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 10**6))
    def test_initializations_agree(self, seed):
        data = synthesize(SyntheticSpec(n=60, d=5, seed=seed % 1000))
        spec = ModelSpec("logistic", 0.1)
        a = fit(data, spec)
        b = fit(data, spec, warm_start=np.random.default_rng(seed).normal(size=5) * 3)
        assert np.linalg.norm(a.theta - b.theta) <= 100 * 1e-10 * max(1.0, np.linalg.norm(a.theta))
