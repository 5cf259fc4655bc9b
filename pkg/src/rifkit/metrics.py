"""Scalar evaluation functions f(theta) whose change under removal is predicted."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .dataset import Dataset
from .glm import ModelSpec, losses, predict, residuals, total_loss

KINDS = ("test-pred-sum", "test-loss-sum", "self-loss", "single-logit")


@dataclass(frozen=True)
class EvaluationFn:
    kind: str
    test_subset: Tuple[int, ...] = ()
    # test row for single-logit
    index: Optional[int] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown evaluation function {self.kind!r}")
        if self.kind == "single-logit" and self.index is None:
            raise ValueError("single-logit needs a test index")
        object.__setattr__(self, "test_subset", tuple(int(i) for i in self.test_subset))

    def _rows(self, data: Dataset) -> np.ndarray:
        idx = np.asarray(self.test_subset, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= data.m):
            raise IndexError("test subset index out of range")
        return idx

    def value(self, theta, data: Dataset, spec: ModelSpec) -> float:
        theta = np.asarray(theta, dtype=np.float64)
        if self.kind == "self-loss":
            return total_loss(theta, data, None, spec)
        if self.kind == "single-logit":
            return float(data.test_features[self.index] @ theta)
        idx = self._rows(data)
        X, y = data.test_features[idx], data.test_labels[idx]
        if self.kind == "test-pred-sum":
            return float(np.sum(predict(spec.family, X, theta)))
        return float(np.sum(losses(spec.family, X, y, theta)))

    def gradient(self, theta, data: Dataset, spec: ModelSpec) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64)
        if self.kind == "self-loss":
            r = residuals(spec.family, data.features, data.labels, theta)
            return data.features.T @ r + spec.lam * theta
        if self.kind == "single-logit":
            return data.test_features[self.index].copy()
        idx = self._rows(data)
        X, y = data.test_features[idx], data.test_labels[idx]
        if self.kind == "test-pred-sum":
            if spec.family == "logistic":
                p = predict(spec.family, X, theta)
                return X.T @ (p * (1.0 - p))
            return X.sum(axis=0)
        return X.T @ residuals(spec.family, X, y, theta)


def evaluate_fn(f: EvaluationFn, theta, data: Dataset, spec: Optional[ModelSpec] = None) -> float:
    return f.value(theta, data, spec or ModelSpec())
