"""Influence (IF), rescaled influence (RIF) and Newton-step (NS) estimates.

Sign convention: every ``delta_theta`` is the predicted change
``theta_without_T - theta_hat`` from *removing* samples.

For both GLM families the per-sample gradient is ``r_i x_i`` and the
per-sample Hessian is ``sigma_i x_i x_i^T``, so with ``z_i = H^{-1} x_i``:

    IF_i  = r_i z_i
    h_i   = sigma_i x_i^T z_i
    RIF_i = IF_i / (1 - h_i)        (Sherman-Morrison on H - sigma_i x_i x_i^T)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

from .dataset import Dataset
from .glm import FittedModel, SolverError, curvatures, hessian_matrix, factorize, residuals
from .metrics import EvaluationFn

LEVERAGE_LIMIT = 1.0 - 1e-8
METHODS = ("IF", "RIF", "NS")


class DegenerateLeverageError(ValueError):
    def __init__(self, index: int, leverage: float):
        super().__init__(f"sample {index} has leverage {leverage:.12f} >= 1 - 1e-8; "
                         "its rescaled influence is unbounded")
        self.index = index
        self.leverage = leverage


class IndefiniteHessianError(SolverError):
    pass


@dataclass
class AttributionVector:
    index: int
    delta_theta: np.ndarray
    leverage: float
    rescale: float
    method: str


@dataclass
class RemovalPrediction:
    indices: np.ndarray
    method: str
    delta_theta: np.ndarray
    effect_linear: float = float("nan")
    effect_reeval: float = float("nan")
    removal_set: object = None


def _require_factor(model: FittedModel):
    if model.chol is None:
        raise ValueError("model has no cached Hessian factorization")


def _require_full_weights(model: FittedModel):
    if not np.all(model.weights == 1.0):
        raise ValueError("attribution needs a model fitted with all weights equal to 1")


def _indices(T) -> np.ndarray:
    idx = getattr(T, "indices", T)
    return np.asarray(sorted(set(int(i) for i in idx)), dtype=np.int64)


def hessian_solve(model: FittedModel, v) -> np.ndarray:
    """``H^{-1} v`` for a vector or a ``d x k`` block of columns."""
    _require_factor(model)
    return sla.cho_solve(model.chol, np.asarray(v, dtype=np.float64), check_finite=False)


def _check_leverage(i: int, h: float):
    if not h < LEVERAGE_LIMIT:
        raise DegenerateLeverageError(i, h)


def _sample_terms(model: FittedModel, data: Dataset, i: int):
    if not 0 <= i < data.n:
        raise IndexError(f"sample index {i} out of range for n={data.n}")
    _require_full_weights(model)
    x = data.features[i]
    fam = model.spec.family
    r = float(residuals(fam, x[None, :], data.labels[i:i + 1], model.theta)[0])
    s = float(curvatures(fam, x[None, :], model.theta)[0])
    z = hessian_solve(model, x)
    return x, r, s, z


def leverage(model: FittedModel, data: Dataset, i: int) -> float:
    x, _, s, z = _sample_terms(model, data, i)
    h = s * float(x @ z)
    _check_leverage(i, h)
    return h


def influence(model: FittedModel, data: Dataset, i: int) -> AttributionVector:
    x, r, s, z = _sample_terms(model, data, i)
    h = s * float(x @ z)
    return AttributionVector(i, r * z, h, 1.0 / (1.0 - h) if h < 1 else float("inf"), "IF")


def rescaled_influence(model: FittedModel, data: Dataset, i: int) -> AttributionVector:
    x, r, s, z = _sample_terms(model, data, i)
    h = s * float(x @ z)
    _check_leverage(i, h)
    rescale = 1.0 / (1.0 - h)
    return AttributionVector(i, rescale * (r * z), h, rescale, "RIF")


def rescaled_influence_sm(model: FittedModel, data: Dataset, i: int) -> AttributionVector:
    """Same quantity via the explicit Sherman-Morrison update of ``H^{-1}``.

    ``(H - s x x^T)^{-1} g = H^{-1} g + H^{-1} x * s (x^T H^{-1} g) / (1 - h)``
    """
    x, r, s, z = _sample_terms(model, data, i)
    g = r * x
    u = hessian_solve(model, g)
    h = s * float(x @ z)
    _check_leverage(i, h)
    delta = u + z * (s * float(x @ u) / (1.0 - h))
    return AttributionVector(i, delta, h, 1.0 / (1.0 - h), "RIF")


@dataclass
class Attributions:
    """All single-sample estimates from one factorization.

    Rows of ``if_vectors`` are ``IF_i``; ``rif_vectors`` scales each row by
    its rescale factor.
    """

    residual: np.ndarray
    sigma: np.ndarray
    leverage: np.ndarray
    if_vectors: np.ndarray

    @property
    def rescale(self) -> np.ndarray:
        return 1.0 / (1.0 - self.leverage)

    @property
    def rif_vectors(self) -> np.ndarray:
        return self.if_vectors * self.rescale[:, None]

    def vectors(self, method: str) -> np.ndarray:
        if method == "IF":
            return self.if_vectors
        if method == "RIF":
            return self.rif_vectors
        raise ValueError(f"no per-sample vectors for method {method!r}")

    def vector(self, i: int, method: str) -> AttributionVector:
        h = float(self.leverage[i])
        delta = self.if_vectors[i] * (1.0 / (1.0 - h) if method == "RIF" else 1.0)
        return AttributionVector(int(i), delta.copy(), h, 1.0 / (1.0 - h), method)


def attribute_all(model: FittedModel, data: Dataset, block: int = 4096) -> Attributions:
    _require_factor(model)
    _require_full_weights(model)
    fam = model.spec.family
    X = data.features
    r = residuals(fam, X, data.labels, model.theta)
    s = curvatures(fam, X, model.theta)
    if_vec = np.empty_like(X)
    lev = np.empty(data.n)
    for lo in range(0, data.n, block):
        hi = min(lo + block, data.n)
        Z = hessian_solve(model, X[lo:hi].T)  # d x b
        lev[lo:hi] = s[lo:hi] * np.einsum("ij,ji->i", X[lo:hi], Z)
        if_vec[lo:hi] = (Z * r[lo:hi]).T
    bad = np.flatnonzero(~(lev < LEVERAGE_LIMIT))
    if bad.size:
        raise DegenerateLeverageError(int(bad[0]), float(lev[bad[0]]))
    return Attributions(r, s, lev, if_vec)


# ------------------------------------------------------------- set estimates

def _effects(pred: RemovalPrediction, model: FittedModel, data: Dataset, f: Optional[EvaluationFn]):
    if f is None:
        return pred
    grad = f.gradient(model.theta, data, model.spec)
    base = f.value(model.theta, data, model.spec)
    pred.effect_linear = float(grad @ pred.delta_theta)
    pred.effect_reeval = f.value(model.theta + pred.delta_theta, data, model.spec) - base
    return pred


def woodbury_crossover(d: int) -> int:
    return max(1, d // 4)


def newton_step(model: FittedModel, data: Dataset, T, f: Optional[EvaluationFn] = None,
                path: str = "auto") -> RemovalPrediction:
    """Solve ``(H - sum_T sigma_i x_i x_i^T) delta = sum_T g_i``.

    ``path`` is ``"woodbury"`` (|T| x |T| capacitance system against the cached
    factor), ``"refactor"`` (fresh Cholesky of the leave-T-out Hessian) or
    ``"auto"``, which picks Woodbury up to |T| = d/4.
    """
    _require_factor(model)
    _require_full_weights(model)
    idx = _indices(T)
    if idx.size and (idx[0] < 0 or idx[-1] >= data.n):
        raise IndexError("removal set index out of range")
    fam = model.spec.family
    k = idx.size
    pred = RemovalPrediction(idx, "NS", np.zeros(data.d), removal_set=T)
    if k == 0:
        return _effects(pred, model, data, f)
    XT = data.features[idx]
    r = residuals(fam, XT, data.labels[idx], model.theta)
    s = curvatures(fam, XT, model.theta)
    g = XT.T @ r
    if path == "auto":
        path = "woodbury" if k <= woodbury_crossover(data.d) else "refactor"
    if path == "woodbury":
        V = XT.T * np.sqrt(s)  # d x k
        A = hessian_solve(model, g)
        B = hessian_solve(model, V)
        C = np.eye(k) - V.T @ B
        try:
            cf = sla.cho_factor(C, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            raise IndefiniteHessianError(
                "leave-T-out Hessian is not positive definite; use a larger lambda") from None
        delta = A + B @ sla.cho_solve(cf, V.T @ A, check_finite=False)
    elif path == "refactor":
        w = np.ones(data.n)
        w[idx] = 0.0
        H = hessian_matrix(fam, data.features, model.theta, w, model.spec.lam)
        try:
            chol = factorize(H)
        except SolverError:
            raise IndefiniteHessianError(
                "leave-T-out Hessian is not positive definite; use a larger lambda") from None
        delta = sla.cho_solve(chol, g, check_finite=False)
    else:
        raise ValueError(f"unknown path {path!r}")
    pred.delta_theta = delta
    return _effects(pred, model, data, f)


def aggregate(vectors: Sequence[AttributionVector], T, f: Optional[EvaluationFn] = None,
              model: Optional[FittedModel] = None, data: Optional[Dataset] = None,
              d: Optional[int] = None) -> RemovalPrediction:
    """Additive set estimate: the sum of per-sample vectors for members of T."""
    idx = _indices(T)
    methods = {v.method for v in vectors}
    if len(methods) > 1:
        raise ValueError(f"cannot aggregate mixed methods {sorted(methods)}")
    method = methods.pop() if methods else "IF"
    by_index = {v.index: v for v in vectors}
    missing = [int(i) for i in idx if int(i) not in by_index]
    if missing:
        raise KeyError(f"no attribution vector for samples {missing[:5]}")
    dim = d if d is not None else (model.d if model is not None else
                                   (vectors[0].delta_theta.shape[0] if vectors else 0))
    delta = np.zeros(dim)
    for i in idx:
        delta = delta + by_index[int(i)].delta_theta
    pred = RemovalPrediction(idx, method, delta, removal_set=T)
    if f is not None:
        if model is None or data is None:
            raise ValueError("model and data are needed to evaluate effects")
        _effects(pred, model, data, f)
    return pred


def aggregate_table(table: Attributions, method: str, T, model: FittedModel, data: Dataset,
                    f: Optional[EvaluationFn] = None) -> RemovalPrediction:
    """Vectorized ``aggregate`` over a precomputed :class:`Attributions`."""
    idx = _indices(T)
    vecs = table.vectors(method)
    delta = vecs[idx].sum(axis=0) if idx.size else np.zeros(data.d)
    return _effects(RemovalPrediction(idx, method, delta, removal_set=T), model, data, f)
