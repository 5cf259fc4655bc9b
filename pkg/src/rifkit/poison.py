"""Flipped-label poisoning: does IF or RIF better predict the poison's pull?

A test point is appended to the training set with its label flipped, the
model is refit, and each estimator predicts how removing that single
poisoned row would move the test point's own logit.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .attribution import newton_step, rescaled_influence, influence
from .dataset import Dataset
from .glm import FittedModel, ModelSpec, fit
from .metrics import EvaluationFn
from .oracle import retrain_without
from .rng import Stream

TRIAL_COLUMNS = ("test_index", "actual", "pred_if", "pred_rif", "pred_ns")


@dataclass
class PoisonTrial:
    test_index: int
    poisoned_train_index: int
    actual_logit_change: float
    pred_if: float
    pred_rif: float
    pred_ns: float


def inject(data: Dataset, test_index: int, flip: bool = True) -> Dataset:
    """Training set plus test row ``test_index`` (label flipped by default) as row n."""
    if not 0 <= test_index < data.m:
        raise IndexError(f"test index {test_index} out of range for m={data.m}")
    x = data.test_features[test_index]
    y = data.test_labels[test_index]
    return data.with_rows(x[None, :], [1.0 - y if flip else y])


def run_trial(data: Dataset, spec: ModelSpec, test_index: int, seed: int = 0, flip: bool = True,
              warm_start: Optional[np.ndarray] = None) -> PoisonTrial:
    poisoned = inject(data, test_index, flip)
    model = fit(poisoned, spec, warm_start=warm_start)
    row = poisoned.n - 1
    f = EvaluationFn("single-logit", index=test_index)
    x = poisoned.test_features[test_index]
    retrained = retrain_without(model, poisoned, [row])
    actual = float(x @ retrained.theta_removed - x @ model.theta)
    pred_if = float(x @ influence(model, poisoned, row).delta_theta)
    pred_rif = float(x @ rescaled_influence(model, poisoned, row).delta_theta)
    pred_ns = newton_step(model, poisoned, [row], f).effect_linear
    return PoisonTrial(test_index, row, actual, pred_if, pred_rif, pred_ns)


def choose_test_indices(m: int, trials: int, seed: int) -> np.ndarray:
    """Distinct test rows drawn uniformly; all of them when ``trials >= m``."""
    return Stream(seed, "poison").sample(m, min(trials, m))


def run_trials(data: Dataset, spec: ModelSpec, trials: int = 40, seed: int = 0,
               base: Optional[FittedModel] = None, workers: int = 1) -> List[PoisonTrial]:
    """Independent trials; each refit is warm-started at the clean optimum."""
    if base is None:
        base = fit(data, spec)
    chosen = [int(t) for t in choose_test_indices(data.m, trials, seed)]
    one = lambda t: run_trial(data, spec, t, seed, warm_start=base.theta)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, chosen))
    return [one(t) for t in chosen]


def write_trials(path, trials: List[PoisonTrial]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRIAL_COLUMNS)
        for t in trials:
            vals = (t.actual_logit_change, t.pred_if, t.pred_rif, t.pred_ns)
            writer.writerow([t.test_index] + [repr(float(v)) for v in vals])
