"""Ground-truth leave-T-out effects by warm-started retraining.

Retrains can be cached on disk. Each entry is one JSON file named by the
16-hex-digit BLAKE2b-64 hash of the key ``(dataset fingerprint, family,
lambda, sorted T)`` and holds::

    {"key": {...}, "indices": [...], "theta_removed": <base64 LE f64>,
     "solver_iters": int, "grad_norm": float}

Files are written to a temporary name and renamed into place, so readers
never observe a partial entry.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .dataset import Dataset
from .glm import FittedModel, decode_array, encode_array, fit
from .metrics import EvaluationFn


@dataclass
class RetrainResult:
    indices: np.ndarray
    theta_removed: np.ndarray
    solver_iters: int
    grad_norm: float
    removal_set: object = None


def _indices(T) -> np.ndarray:
    idx = getattr(T, "indices", T)
    return np.asarray(sorted(set(int(i) for i in idx)), dtype=np.int64)


class RetrainCache:
    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(data: Dataset, model: FittedModel, idx: np.ndarray) -> dict:
        return {"dataset": data.fingerprint(), "family": model.spec.family,
                "lambda": repr(float(model.spec.lam)), "indices": [int(i) for i in idx]}

    @staticmethod
    def filename(key: dict) -> str:
        blob = json.dumps(key, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.blake2b(blob, digest_size=8).hexdigest() + ".json"

    def get(self, key: dict) -> Optional[RetrainResult]:
        path = self.directory / self.filename(key)
        if not path.exists():
            return None
        doc = json.loads(path.read_text())
        if doc.get("key") != key:
            return None
        return RetrainResult(np.asarray(doc["indices"], dtype=np.int64), decode_array(doc["theta_removed"]),
                             int(doc["solver_iters"]), float(doc["grad_norm"]))

    def put(self, key: dict, result: RetrainResult):
        doc = {"key": key, "indices": [int(i) for i in result.indices],
               "theta_removed": encode_array(result.theta_removed),
               "solver_iters": result.solver_iters, "grad_norm": result.grad_norm}
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        with os.fdopen(fd, "w") as fh:
            json.dump(doc, fh, sort_keys=True)
        os.replace(tmp, self.directory / self.filename(key))


def retrain_without(model: FittedModel, data: Dataset, T, cache: Optional[RetrainCache] = None,
                    warm: bool = True) -> RetrainResult:
    """Refit with weight 0 on T and 1 elsewhere, starting from ``model.theta``."""
    idx = _indices(T)
    if idx.size and (idx[0] < 0 or idx[-1] >= data.n):
        raise IndexError("removal set index out of range")
    key = None
    if cache is not None:
        key = cache.key(data, model, idx)
        hit = cache.get(key)
        if hit is not None:
            hit.removal_set = T
            return hit
    w = np.ones(data.n)
    w[idx] = 0.0
    refit = fit(data, model.spec, weights=w, warm_start=model.theta if warm else None)
    result = RetrainResult(idx, refit.theta, refit.iterations, refit.grad_norm, T)
    if cache is not None:
        cache.put(key, result)
    return result


def actual_effect(model: FittedModel, data: Dataset, T, f: EvaluationFn,
                  retrained: Optional[RetrainResult] = None, cache: Optional[RetrainCache] = None) -> float:
    if retrained is None:
        retrained = retrain_without(model, data, T, cache=cache)
    return f.value(retrained.theta_removed, data, model.spec) - f.value(model.theta, data, model.spec)
