"""Actual-vs-predicted sweeps over removal strategies, sizes and metrics."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence

import numpy as np

from .attribution import aggregate_table, attribute_all, newton_step
from .dataset import Dataset
from .glm import FittedModel, ModelSpec, SolverError, fit, losses
from .metrics import KINDS, EvaluationFn, evaluate_fn
from .oracle import RetrainCache, retrain_without
from .rng import Stream
from . import selection

__all__ = ["EvaluationFn", "evaluate_fn", "EvaluationRecord", "build_test_subset", "run_sweep",
           "summarize", "write_records", "read_records", "RECORD_COLUMNS"]

SWEEP_METRICS = ("test-pred-sum", "test-loss-sum", "self-loss")
RECORD_COLUMNS = ("dataset", "strategy", "k", "metric", "actual", "pred_if", "pred_rif",
                  "pred_ns", "seed", "status")
DEFAULT_TEST_SIZE = 50


@dataclass
class EvaluationRecord:
    dataset: str
    strategy: str
    k: int
    metric: str
    actual: float
    pred_if: float
    pred_rif: float
    pred_ns: float
    seed: int
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass
class ParamRecord:
    """Parameter-space distances for one removal set."""

    strategy: str
    k: int
    actual_shift: float
    err_if: float
    err_rif: float
    err_ns: float


@dataclass
class SweepResult:
    records: List[EvaluationRecord]
    params: List[ParamRecord] = field(default_factory=list)
    test_subset: tuple = ()
    model: Optional[FittedModel] = None


def build_test_subset(data: Dataset, model: FittedModel, size: int = DEFAULT_TEST_SIZE,
                      seed: int = 0) -> list:
    """Highest-loss ``ceil(size/2)`` test points plus a uniform sample of the rest."""
    if data.m == 0:
        raise ValueError("dataset has no test points")
    if not 0 <= size <= data.m:
        raise ValueError(f"test subset size {size} exceeds m={data.m}")
    loss = losses(model.spec.family, data.test_features, data.test_labels, model.theta)
    order = np.lexsort((np.arange(data.m), -loss))
    n_high = math.ceil(size / 2)
    high = order[:n_high]
    rest = np.sort(order[n_high:])
    pick = Stream(seed, "test-subset").sample(rest.size, size - n_high)
    return sorted(int(i) for i in np.concatenate([high, rest[pick]]))


def set_seed(master: int, strategy: str, k: int) -> int:
    return int(Stream(master, "sweep", strategy, k).raw(1)[0])


def make_set(strategy: str, data: Dataset, model: FittedModel, k: int, seed: int,
             scores: dict) -> selection.RemovalSet:
    if strategy == "feature-cluster":
        return selection.cluster_by_feature(data, k, seed)
    if strategy == "l2-cluster":
        return selection.cluster_by_l2(data, k, seed)
    if strategy == "random":
        return selection.random_subset(data.n, k, seed)
    if strategy in selection.TOP_STRATEGIES:
        kind = selection.TOP_STRATEGIES[strategy][0]
        return selection.top_percentile(data, model, strategy, k, seed, scores=scores[kind])
    raise ValueError(f"unknown strategy {strategy!r}")


def run_sweep(data: Dataset, spec: ModelSpec, strategies: Sequence[str], schedule: Sequence[int],
              metrics: Sequence[str] = SWEEP_METRICS, seed: int = 0, *,
              model: Optional[FittedModel] = None, cache: Optional[RetrainCache] = None,
              test_size: int = DEFAULT_TEST_SIZE, effect: str = "reeval", workers: int = 1,
              on_record: Optional[Callable[[EvaluationRecord], None]] = None) -> SweepResult:
    """One record per (strategy, k, metric), in that nesting order.

    ``effect="reeval"`` reports f(theta_hat + delta) - f(theta_hat) for every
    estimator; ``"linear"`` reports <grad f, delta>. Failed retrains or
    Newton steps yield rows with a ``skipped:`` status instead of aborting.
    """
    if effect not in ("reeval", "linear"):
        raise ValueError("effect must be 'reeval' or 'linear'")
    for m in metrics:
        if m not in KINDS or m == "single-logit":
            raise ValueError(f"unsupported sweep metric {m!r}")
    if model is None:
        model = fit(data, spec)
    strategies = list(strategies)
    needs_test = any(m != "self-loss" for m in metrics) or any(s in selection.TOP_STRATEGIES for s in strategies)
    subset = ()
    if needs_test:
        subset = tuple(build_test_subset(data, model, min(test_size, data.m), seed))
    fns = {m: EvaluationFn(m, subset) for m in metrics}
    if not strategies:
        return SweepResult([], [], subset, model)

    table = attribute_all(model, data)
    scores = {}
    for kind in ("test-loss-sum", "test-pred-sum"):
        if any(selection.TOP_STRATEGIES.get(s, ("",))[0] == kind for s in strategies):
            scores[kind] = selection.if_scores(model, data, EvaluationFn(kind, subset), table)
    base = {m: f.value(model.theta, data, spec) for m, f in fns.items()}
    attr = "effect_reeval" if effect == "reeval" else "effect_linear"

    def one(task):
        strategy, k = task
        sseed = set_seed(seed, strategy, k)

        def skipped(reason):
            return [EvaluationRecord(data.name, strategy, k, m, math.nan, math.nan, math.nan, math.nan,
                                     sseed, f"skipped: {reason}") for m in metrics], None
        try:
            T = make_set(strategy, data, model, k, sseed, scores)
        except ValueError as exc:
            return skipped(str(exc))
        try:
            retrained = retrain_without(model, data, T, cache=cache)
        except SolverError as exc:
            return skipped(f"retrain failed: {exc}")
        try:
            ns = newton_step(model, data, T)
        except SolverError as exc:
            return skipped(f"newton step failed: {exc}")
        preds = {"IF": aggregate_table(table, "IF", T, model, data),
                 "RIF": aggregate_table(table, "RIF", T, model, data), "NS": ns}
        shift = retrained.theta_removed - model.theta
        param = ParamRecord(strategy, k, float(np.linalg.norm(shift)),
                            *(float(np.linalg.norm(preds[meth].delta_theta - shift))
                              for meth in ("IF", "RIF", "NS")))
        rows = []
        for m in metrics:
            f = fns[m]
            actual = f.value(retrained.theta_removed, data, spec) - base[m]
            vals = {}
            for meth, p in preds.items():
                if attr == "effect_reeval":
                    vals[meth] = f.value(model.theta + p.delta_theta, data, spec) - base[m]
                else:
                    vals[meth] = float(f.gradient(model.theta, data, spec) @ p.delta_theta)
            rows.append(EvaluationRecord(data.name, strategy, k, m, actual, vals["IF"], vals["RIF"],
                                         vals["NS"], sseed))
        return rows, param

    tasks = [(s, int(k)) for s in strategies for k in schedule]
    records, params = [], []
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = pool.map(one, tasks)
            for rows, param in results:
                _collect(rows, param, records, params, on_record)
    else:
        for task in tasks:
            rows, param = one(task)
            _collect(rows, param, records, params, on_record)
    return SweepResult(records, params, subset, model)


def _collect(rows, param, records, params, on_record):
    for r in rows:
        records.append(r)
        if on_record is not None:
            on_record(r)
    if param is not None:
        params.append(param)


# ---------------------------------------------------------------- summary

@dataclass
class SummaryRow:
    strategy: str
    metric: str
    method: str
    count: int
    slope: float
    intercept: float
    r2: float
    mean_signed_error: float
    mean_abs_error: float
    status: str = "ok"


def fit_line(actual: np.ndarray, pred: np.ndarray):
    """Least-squares ``pred ~ a + b * actual``; returns ``(b, a, r2)``."""
    x = np.asarray(actual, dtype=np.float64)
    y = np.asarray(pred, dtype=np.float64)
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    syy = float(np.sum((y - ym) ** 2))
    sxy = float(np.sum((x - xm) * (y - ym)))
    if sxx == 0:
        return math.nan, math.nan, math.nan
    slope = sxy / sxx
    r2 = 0.0 if syy == 0 else sxy * sxy / (sxx * syy)
    return slope, ym - slope * xm, r2


def summarize(records: Iterable[EvaluationRecord], pooled: bool = True) -> List[SummaryRow]:
    """Regression of prediction on actual per (strategy, metric) and method.

    With ``pooled`` an extra group with strategy ``"all"`` pools every
    strategy for each metric.
    """
    records = [r for r in records if r.ok]
    if not records:
        raise ValueError("no usable records to summarize")
    groups = {}
    for r in records:
        groups.setdefault((r.strategy, r.metric), []).append(r)
        if pooled:
            groups.setdefault(("all", r.metric), []).append(r)
    out = []
    for (strategy, metric), rows in groups.items():
        actual = np.array([r.actual for r in rows])
        for method, attr in (("IF", "pred_if"), ("RIF", "pred_rif"), ("NS", "pred_ns")):
            pred = np.array([getattr(r, attr) for r in rows])
            err = pred - actual
            if len(rows) < 3:
                out.append(SummaryRow(strategy, metric, method, len(rows), math.nan, math.nan, math.nan,
                                      float(err.mean()), float(np.abs(err).mean()), "insufficient"))
                continue
            slope, icpt, r2 = fit_line(actual, pred)
            status = "ok" if math.isfinite(slope) else "insufficient"
            out.append(SummaryRow(strategy, metric, method, len(rows), slope, icpt, r2,
                                  float(err.mean()), float(np.abs(err).mean()), status))
    return out


# -------------------------------------------------------------------- CSV

def _cell(v) -> str:
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(float(v))
    return str(v)


def write_records(path, records: Iterable[EvaluationRecord]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        for r in records:
            writer.writerow([_cell(getattr(r, c)) for c in RECORD_COLUMNS])


class RecordWriter:
    """Streams records to CSV as they are produced."""

    def __init__(self, path):
        self._fh = open(path, "w", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(RECORD_COLUMNS)

    def __call__(self, r: EvaluationRecord):
        self._writer.writerow([_cell(getattr(r, c)) for c in RECORD_COLUMNS])
        self._fh.flush()

    def close(self):
        self._fh.close()


def read_records(path) -> List[EvaluationRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            num = {c: float(row[c]) if row[c] != "" else math.nan
                   for c in ("actual", "pred_if", "pred_rif", "pred_ns")}
            out.append(EvaluationRecord(row["dataset"], row["strategy"], int(row["k"]), row["metric"],
                                        seed=int(row["seed"]), status=row["status"], **num))
    return out


SUMMARY_COLUMNS = ("strategy", "metric", "method", "count", "slope", "intercept", "r2",
                   "mean_signed_error", "mean_abs_error", "status")


def write_summary(path, rows: Iterable[SummaryRow]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for r in rows:
            writer.writerow([_cell(getattr(r, c)) for c in SUMMARY_COLUMNS])
