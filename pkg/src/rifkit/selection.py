"""Removal-set construction: clustered, top-percentile and random subsets.

Ties are always broken toward the lower sample index.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .attribution import Attributions, attribute_all
from .dataset import Dataset
from .glm import FittedModel
from .metrics import EvaluationFn
from .rng import Stream

STRATEGIES = ("feature-cluster", "l2-cluster", "top-pos-loss", "top-neg-loss",
              "top-pos-pred", "top-neg-pred", "random")
TOP_STRATEGIES = {
    "top-pos-loss": ("test-loss-sum", 1.0),
    "top-neg-loss": ("test-loss-sum", -1.0),
    "top-pos-pred": ("test-pred-sum", 1.0),
    "top-neg-pred": ("test-pred-sum", -1.0),
}


@dataclass(frozen=True)
class RemovalSet:
    indices: tuple
    strategy: str
    k: int
    seed: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("removal set indices must be strictly increasing")
        if len(idx) != self.k:
            raise ValueError(f"removal set has {len(idx)} indices, expected k={self.k}")
        if idx and idx[0] < 0:
            raise ValueError("negative sample index")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def of(cls, indices, strategy: str, seed: int) -> "RemovalSet":
        idx = tuple(sorted(int(i) for i in indices))
        return cls(idx, strategy, len(idx), int(seed))

    def validate(self, n: int):
        if self.indices and self.indices[-1] >= n:
            raise ValueError(f"index {self.indices[-1]} out of range for n={n}")

    def to_json(self) -> str:
        return json.dumps({"strategy": self.strategy, "k": self.k, "seed": self.seed,
                           "indices": list(self.indices)})

    @classmethod
    def from_json(cls, text: str) -> "RemovalSet":
        doc = json.loads(text)
        return cls(tuple(doc["indices"]), doc["strategy"], int(doc["k"]), int(doc["seed"]))


def size_schedule(n: int, count: int = 40, lo: float = 0.001, hi: float = 0.05) -> list:
    """``round(n * p)`` for ``count`` fractions p spaced linearly in [lo, hi]."""
    out = []
    for p in np.linspace(lo, hi, count):
        k = max(1, int(math.floor(n * p + 0.5)))
        if k not in out:
            out.append(k)
    return out


def _closest(dist: np.ndarray, center: int, k: int) -> np.ndarray:
    n = dist.shape[0]
    not_center = np.ones(n, dtype=np.int8)
    not_center[center] = 0
    # primary key distance, then the center itself, then index
    order = np.lexsort((np.arange(n), not_center, dist))
    return order[:k]


def _check_k(k: int, n: int):
    if not 0 <= k <= n:
        raise ValueError(f"cannot select k={k} of n={n} samples")


def cluster_by_feature(data: Dataset, k: int, seed: int) -> RemovalSet:
    _check_k(k, data.n)
    rng = Stream(seed, "feature-cluster")
    i = rng.integer(data.n)
    j = rng.integer(data.d)
    col = data.features[:, j]
    dist = np.abs(col - col[i])
    return RemovalSet.of(_closest(dist, i, k), "feature-cluster", seed)


def cluster_by_l2(data: Dataset, k: int, seed: int) -> RemovalSet:
    _check_k(k, data.n)
    i = Stream(seed, "l2-cluster").integer(data.n)
    dist = np.linalg.norm(data.features - data.features[i], axis=1)
    return RemovalSet.of(_closest(dist, i, k), "l2-cluster", seed)


def random_subset(n: int, k: int, seed: int) -> RemovalSet:
    _check_k(k, n)
    return RemovalSet.of(Stream(seed, "random").sample(n, k), "random", seed)


def if_scores(model: FittedModel, data: Dataset, f: EvaluationFn,
              table: Optional[Attributions] = None) -> np.ndarray:
    """Linearized IF-predicted change of ``f`` from removing each sample."""
    table = table if table is not None else attribute_all(model, data)
    return table.if_vectors @ f.gradient(model.theta, data, model.spec)


def top_percentile(data: Dataset, model: FittedModel, metric: str, k: int, seed: int,
                   test_subset=(), table: Optional[Attributions] = None,
                   scores: Optional[np.ndarray] = None) -> RemovalSet:
    """Random half of the 2k samples with the most extreme IF-predicted effect.

    ``metric`` is one of the ``top-*`` strategy names; the sign picks the
    largest increase (pos) or largest decrease (neg) of the test metric.
    """
    if metric not in TOP_STRATEGIES:
        raise ValueError(f"unknown top-percentile metric {metric!r}")
    if 2 * k > data.n:
        raise ValueError(f"top-percentile needs 2k <= n, got k={k}, n={data.n}")
    kind, sign = TOP_STRATEGIES[metric]
    if scores is None:
        scores = if_scores(model, data, EvaluationFn(kind, tuple(test_subset)), table)
    order = np.lexsort((np.arange(data.n), -sign * np.asarray(scores)))
    pool = order[:2 * k]
    pick = Stream(seed, metric).sample(pool.size, k)
    return RemovalSet.of(pool[pick], metric, seed)
