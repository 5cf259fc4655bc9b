import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from hypothesis import given, settings, strategies as st

from rifkit.evaluation import (EvaluationRecord, RecordWriter, build_test_subset, fit_line,
                               read_records, run_sweep, summarize, write_records, RECORD_COLUMNS)
from rifkit.glm import ModelSpec, fit, losses
from rifkit.metrics import EvaluationFn, evaluate_fn
from rifkit.selection import STRATEGIES
from conftest import logistic_instance, scaled_logistic_data


class TestEvaluationFn:
    def test_zero_theta_pred_sum(self, small_logistic):
        data, model = small_logistic
        f = EvaluationFn("test-pred-sum", range(40))
        assert evaluate_fn(f, np.zeros(data.d), data, model.spec) == 20.0

    def test_zero_theta_loss_sum(self, small_logistic):
        data, model = small_logistic
        f = EvaluationFn("test-loss-sum", range(40))
        assert evaluate_fn(f, np.zeros(data.d), data, model.spec) == pytest.approx(40 * math.log(2), rel=1e-14)

    def test_self_loss_optimal(self, small_logistic):
        data, model = small_logistic
        f = EvaluationFn("self-loss")
        base = f.value(model.theta, data, model.spec)
        rng = np.random.default_rng(0)
        for _ in range(100):
            assert f.value(model.theta + 0.1 * rng.normal(size=data.d), data, model.spec) >= base

    def test_single_logit(self, small_logistic):
        data, model = small_logistic
        f = EvaluationFn("single-logit", (1, 2), index=4)
        assert f.value(model.theta, data, model.spec) == data.test_features[4] @ model.theta

    @pytest.mark.parametrize("kind", ["test-pred-sum", "test-loss-sum", "self-loss"])
    def test_gradient_finite_difference(self, small_logistic, kind):
        from conftest import central_gradient
        data, model = small_logistic
        f = EvaluationFn(kind, range(10))
        theta = model.theta + 0.1
        fd = central_gradient(lambda t: f.value(t, data, model.spec), theta, 1e-5)
        assert_allclose(f.gradient(theta, data, model.spec), fd, rtol=1e-5, atol=1e-6)

    def test_bad_subset(self, small_logistic):
        data, model = small_logistic
        with pytest.raises(IndexError):
            EvaluationFn("test-pred-sum", (data.m,)).value(model.theta, data, model.spec)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            EvaluationFn("accuracy")


class TestBuildTestSubset:
    def test_full(self, small_logistic):
        data, model = small_logistic
        assert build_test_subset(data, model, data.m, 0) == list(range(data.m))

    def test_size_two(self, small_logistic):
        data, model = small_logistic
        loss = losses("logistic", data.test_features, data.test_labels, model.theta)
        out = build_test_subset(data, model, 2, 3)
        assert int(np.argmax(loss)) in out and len(out) == 2

    def test_high_loss_half(self, small_logistic):
        data, model = small_logistic
        loss = losses("logistic", data.test_features, data.test_labels, model.theta)
        top = sorted(range(data.m), key=lambda i: (-loss[i], i))[:13]
        out = build_test_subset(data, model, 25, 1)
        assert set(top) <= set(out) and len(out) == 25

    def test_no_test_set(self, small_logistic):
        data, model = small_logistic
        from rifkit.dataset import Dataset
        empty = Dataset(data.features, data.labels, name="x")
        with pytest.raises(ValueError):
            build_test_subset(empty, model, 1, 0)


class TestFitLine:
    def test_perfect(self):
        x = np.arange(10.0)
        slope, icpt, r2 = fit_line(x, x)
        assert slope == pytest.approx(1.0) and r2 == pytest.approx(1.0) and icpt == pytest.approx(0, abs=1e-12)

    def test_constant_predictions(self):
        slope, _, r2 = fit_line(np.arange(10.0), np.full(10, 3.0))
        assert slope == 0 and r2 == 0

    @settings(max_examples=50)
    @given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=3, max_size=30))
    def test_normal_equations(self, pts):
        x = np.array([p[0] for p in pts])
        y = np.array([p[1] for p in pts])
        if np.ptp(x) < 1e-3:
            return
        A = np.array([[len(x), x.sum()], [x.sum(), x @ x]])
        icpt, slope = np.linalg.solve(A, [y.sum(), x @ y])
        s, i, _ = fit_line(x, y)
        assert s == pytest.approx(slope, rel=1e-6, abs=1e-8)
        assert i == pytest.approx(icpt, rel=1e-6, abs=1e-6)


def _record(strategy, k, actual, pif, prif, pns, status="ok", metric="self-loss"):
    return EvaluationRecord("d", strategy, k, metric, actual, pif, prif, pns, 0, status)


class TestSummarize:
    def test_insufficient(self):
        rows = summarize([_record("random", 1, 1.0, 1.0, 1.0, 1.0), _record("random", 2, 2.0, 2.0, 2.0, 2.0)])
        assert all(r.status == "insufficient" for r in rows)

    def test_slopes_and_signed_error(self):
        recs = [_record("random", k, float(k), 0.5 * k, float(k), float(k)) for k in range(1, 6)]
        rows = {(r.strategy, r.method): r for r in summarize(recs)}
        assert rows["random", "IF"].slope == pytest.approx(0.5)
        assert rows["random", "IF"].mean_signed_error < 0
        assert rows["random", "RIF"].r2 == pytest.approx(1.0)
        assert ("all", "NS") in rows

    def test_skipped_rows_ignored(self):
        recs = [_record("random", k, float(k), float(k), float(k), float(k)) for k in range(1, 5)]
        recs.append(_record("random", 9, math.nan, math.nan, math.nan, math.nan, "skipped: x"))
        assert all(r.count == 4 for r in summarize(recs))

    def test_empty(self):
        with pytest.raises(ValueError):
            summarize([])


class TestSweep:
    def test_empty_strategies(self, small_logistic):
        data, model = small_logistic
        assert run_sweep(data, model.spec, [], [1, 2], model=model).records == []

    def test_layout_and_singletons(self, small_logistic):
        data, model = small_logistic
        res = run_sweep(data, model.spec, ["random", "l2-cluster"], [1, 3], model=model, seed=2)
        keys = [(r.strategy, r.k, r.metric) for r in res.records]
        assert keys == [(s, k, m) for s in ("random", "l2-cluster") for k in (1, 3)
                        for m in ("test-pred-sum", "test-loss-sum", "self-loss")]
        for r in res.records:
            assert r.ok and all(math.isfinite(v) for v in (r.actual, r.pred_if, r.pred_rif, r.pred_ns))
            if r.k == 1:
                assert r.pred_rif == pytest.approx(r.pred_ns, rel=1e-6, abs=1e-12)

    def test_linear_effect_flag(self, small_logistic):
        data, model = small_logistic
        res = run_sweep(data, model.spec, ["random"], [2], ["self-loss"], model=model, effect="linear")
        # first-order change of the full objective at its optimum is ~0
        assert abs(res.records[0].pred_if) < 1e-8

    def test_rif_beats_if(self):
        data = scaled_logistic_data(500, 50, seed=1)
        res = run_sweep(data, ModelSpec("logistic", 1e-2), STRATEGIES, [1, 3, 6, 12, 25], seed=1)
        err_if = np.mean([abs(r.pred_if - r.actual) for r in res.records])
        err_rif = np.mean([abs(r.pred_rif - r.actual) for r in res.records])
        assert err_rif < err_if

    def test_rif_beats_if_unit_scale(self):
        data, model = logistic_instance(n=500, d=50, seed=1, lam=1e-2)
        res = run_sweep(data, model.spec, STRATEGIES, [1, 3, 6, 12, 25], seed=1, model=model)
        err_if = np.mean([abs(r.pred_if - r.actual) for r in res.records])
        err_rif = np.mean([abs(r.pred_rif - r.actual) for r in res.records])
        assert err_rif < err_if

    def test_reproducible(self, small_logistic, tmp_path):
        data, model = small_logistic
        out = []
        for name in ("a.csv", "b.csv"):
            res = run_sweep(data, model.spec, ["top-pos-loss", "feature-cluster"], [2, 5], seed=9)
            write_records(tmp_path / name, res.records)
            out.append((tmp_path / name).read_bytes())
        assert out[0] == out[1]

    def test_parallel_matches_serial(self, small_logistic):
        data, model = small_logistic
        a = run_sweep(data, model.spec, ["random", "top-neg-pred"], [2, 4, 8], seed=1, model=model)
        b = run_sweep(data, model.spec, ["random", "top-neg-pred"], [2, 4, 8], seed=1, model=model, workers=3)
        assert a.records == b.records

    def test_skipped_rows(self, small_logistic):
        data, model = small_logistic
        res = run_sweep(data, model.spec, ["top-pos-loss"], [data.n], ["self-loss"], model=model)
        assert res.records[0].status.startswith("skipped:")

    def test_streaming_and_csv(self, small_logistic, tmp_path):
        data, model = small_logistic
        writer = RecordWriter(tmp_path / "r.csv")
        res = run_sweep(data, model.spec, ["random"], [1, 2, 3], model=model, on_record=writer)
        writer.close()
        text = (tmp_path / "r.csv").read_text().splitlines()
        assert text[0] == ",".join(RECORD_COLUMNS) and len(text) == 1 + len(res.records)
        assert read_records(tmp_path / "r.csv") == res.records

    def test_empty_set_all_zero(self, small_logistic):
        data, model = small_logistic
        from rifkit.attribution import newton_step, aggregate_table, attribute_all
        from rifkit.oracle import actual_effect
        f = EvaluationFn("test-loss-sum", range(10))
        t = attribute_all(model, data)
        assert actual_effect(model, data, [], f) == pytest.approx(0, abs=1e-10)
        assert newton_step(model, data, [], f).effect_reeval == 0
        assert aggregate_table(t, "IF", [], model, data, f).effect_reeval == 0
