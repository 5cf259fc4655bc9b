import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from hypothesis import given, settings, strategies as st

from rifkit import theory
from rifkit.dataset import Dataset, SyntheticSpec, synthesize
from rifkit.evaluation import build_test_subset
from rifkit.glm import ModelSpec, fit
from rifkit.metrics import EvaluationFn
from rifkit.rng import Stream
from conftest import logistic_instance


def _dense(scale, x):
    return scale * np.outer(x, x)


class TestRank1Sqrt:
    def test_unit_vector(self):
        scale, x = theory.rank1_sqrt(4.0, np.array([1.0, 0.0, 0.0]))
        assert_allclose(_dense(scale, x), np.diag([2.0, 0, 0]))

    def test_zero_sigma(self):
        scale, x = theory.rank1_sqrt(0.0, np.array([1.0, 2.0]))
        assert np.all(_dense(scale, x) == 0)

    def test_zero_vector(self):
        with pytest.raises(ValueError):
            theory.rank1_sqrt(1.0, np.zeros(3))

    @settings(max_examples=50)
    @given(st.floats(1e-6, 1e3), st.integers(0, 2**32 - 1))
    def test_square(self, sigma, seed):
        x = Stream(seed).normal(5)
        R = _dense(*theory.rank1_sqrt(sigma, x))
        H = sigma * np.outer(x, x)
        assert np.linalg.norm(R @ R - H) <= 1e-12 * np.linalg.norm(H)


def _functional(data, model, kind="test-loss-sum"):
    if kind == "self-loss":
        return EvaluationFn("self-loss")
    return EvaluationFn(kind, build_test_subset(data, model, min(20, data.m), 0))


class TestConstants:
    def test_orthogonal_design(self):
        d = 6
        y = np.linspace(-1.0, 2.0, d)
        data = Dataset(np.eye(d), y, np.eye(d)[:2], y[:2], binary=False)
        model = fit(data, ModelSpec("least-squares", 1.0))
        c = theory.compute_constants(model, data, EvaluationFn("test-pred-sum", (0, 1)))
        r = model.theta - y
        assert c.c_ell == pytest.approx(np.max(np.abs(r)) / math.sqrt(2), rel=1e-12)
        assert c.c_r == pytest.approx(2.0, rel=1e-12)
        assert c.delta == 0.0 and c.epsilon == 0.0

    @pytest.mark.parametrize("family,kind", [("logistic", "test-loss-sum"), ("logistic", "single-logit"),
                                             ("least-squares", "test-pred-sum")])
    def test_dense_oracle(self, family, kind):
        label = "logistic" if family == "logistic" else "linear"
        data = synthesize(SyntheticSpec(n=63, d=10, label_model=label, noise=0.3, seed=5))
        assert data.n == 50
        model = fit(data, ModelSpec(family, 0.1))
        f = EvaluationFn(kind, (0, 3, 5), index=2)
        fast = theory.compute_constants(model, data, f, block=7)
        slow = theory.dense_constants(model, data, f)
        for name in ("c_ell", "c_r", "delta", "epsilon", "eta"):
            assert getattr(fast, name) == pytest.approx(getattr(slow, name), rel=1e-9), name

    def test_invariants(self, small_logistic):
        data, model = small_logistic
        c = theory.compute_constants(model, data, _functional(data, model))
        assert c.c_r >= 1
        assert min(c.c_ell, c.delta, c.epsilon, c.eta) >= 0

    def test_sampled_mode(self, small_logistic):
        data, model = small_logistic
        f = _functional(data, model)
        exact = theory.compute_constants(model, data, f)
        approx = theory.compute_constants(model, data, f, pair_limit=40)
        assert approx.sampled and approx.rows_scanned == 40
        assert approx.delta <= exact.delta and approx.epsilon <= exact.epsilon
        assert approx.c_r == exact.c_r and approx.c_ell == exact.c_ell

    def test_bound_formula(self):
        c = theory.AssumptionConstants(c_ell=2.0, c_r=1.5, delta=0.1, epsilon=0.3, eta=0.5)
        assert c.bound(3) == pytest.approx(9 * 0.5 * 4.0 * (0.3 + 1.5 * 2.0 * 0.1))
        assert c.k_max == pytest.approx(1 / 0.3)


@pytest.fixture(scope="module")
def instance():
    data, model = logistic_instance(n=1000, d=100, seed=0, lam=1e-2)
    return model, data, _functional(data, model)


class TestRemovalBound:
    def test_k0(self, instance):
        rep = theory.verify_theorem1(*instance, k=0, trials=10)
        assert rep.satisfied and rep.observed_gap == 0 and rep.bound == 0

    def test_k1(self, instance):
        rep = theory.verify_theorem1(*instance, k=1, trials=10)
        assert rep.satisfied and rep.observed_gap == 0

    def test_singleton_gap_is_zero_when_sampled(self, instance):
        model, data, f = instance
        from rifkit.attribution import attribute_all
        t = attribute_all(model, data)
        g = f.gradient(model.theta, data, model.spec)
        assert theory._gap(model, data, t, g, np.array([7])) <= 1e-12 * np.linalg.norm(g) * \
            np.linalg.norm(t.rif_vectors[7])

    def test_within_precondition(self, instance):
        c = theory.compute_constants(*instance)
        for k in range(2, int(math.floor(c.k_max)) + 1):
            rep = theory.verify_theorem1(*instance, k=k, trials=200, seed=k, constants=c)
            assert rep.satisfied, (k, rep.observed_gap, rep.bound)
            assert len(rep.gaps) == 200 and rep.skipped == 0

    def test_budget_exceeded(self, instance):
        c = theory.compute_constants(*instance)
        k = int(math.floor(c.k_max)) + 1
        rep = theory.verify_theorem1(*instance, k=k, trials=5, constants=c)
        assert not rep.satisfied and rep.reason == "budget exceeds threshold"
        assert "gaps" not in rep.to_dict()


class TestLemma:
    def test_single_matrix_equality(self):
        rng = Stream(3, "one")
        H, A = theory.lemma_instance(rng, 1, 6)
        lhs, rhs, sigma = theory.lemma_sides(H, A)
        assert lhs == pytest.approx(sigma, rel=1e-12) and rhs == pytest.approx(sigma, rel=1e-12)

    def test_shared_direction(self):
        for t in range(20):
            H, A = theory.lemma_instance(Stream(t, "shared"), 5, 8, shared_direction=True)
            lhs, rhs, _ = theory.lemma_sides(H, A)
            assert lhs <= rhs * (1 + theory.LEMMA_RTOL)

    def test_random_trials(self):
        rep = theory.verify_lemma_psd_sum(200, seed=1)
        assert rep.holds and rep.violations == 0
        assert sum(rep.histogram) == 200
        assert max(rep.ratios) <= 1 + theory.LEMMA_RTOL

    def test_eigenvalue_range(self):
        H, _ = theory.lemma_instance(Stream(0, "h"), 3, 10)
        w = np.linalg.eigvalsh(H)
        assert w.min() >= 1 - 1e-12 and w.max() <= 10 + 1e-12


class TestSNR:
    def test_singleton_infinite(self, small_logistic):
        data, model = small_logistic
        rep = theory.snr_estimate(model, data, _functional(data, model), 1)
        assert rep.snr == math.inf

    def test_signal_is_best_subset(self, small_logistic):
        data, model = small_logistic
        f = _functional(data, model)
        rep = theory.snr_estimate(model, data, f, 3, trials=20)
        from rifkit.attribution import attribute_all
        e = attribute_all(model, data).rif_vectors @ f.gradient(model.theta, data, model.spec)
        brute = max(abs(e[list(c)].sum()) for c in [np.argsort(e)[:3], np.argsort(e)[-3:]])
        assert rep.signal == pytest.approx(brute, rel=1e-12)
        assert 0 < rep.snr < math.inf
        assert rep.reference == pytest.approx(data.n / (3 * math.sqrt(data.d)))
