"""L2-regularized logistic and least-squares objectives, fit by damped Newton.

The objective for weights ``w`` is

    F(theta) = sum_i w_i * loss_i(theta) + (lam / 2) * ||theta||^2

The regularizer is a single data-independent term: it is never reweighted or
removed along with samples, so every leave-T-out Hessian keeps the full
``lam * I``.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy.special import expit

from .dataset import Dataset

FAMILIES = ("logistic", "least-squares")
DEFAULT_LAMBDA = 1e-5
TOLERANCE = 1e-10
MAX_ITER = 200
ARMIJO = 1e-4
SHRINK = 0.5


class SolverError(RuntimeError):
    """Newton iteration failed to converge or hit a singular Hessian."""

    def __init__(self, message: str, grad_norm: float = float("nan")):
        super().__init__(message)
        self.grad_norm = grad_norm


@dataclass(frozen=True)
class ModelSpec:
    family: str = "logistic"
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if not self.lam >= 0:
            raise ValueError("lambda must be nonnegative")


@dataclass
class FittedModel:
    theta: np.ndarray
    spec: ModelSpec
    weights: np.ndarray
    grad_norm: float
    iterations: int = 0
    # scipy cho_factor output for the total Hessian at theta
    chol: Optional[tuple] = field(default=None, repr=False)

    @property
    def d(self) -> int:
        return self.theta.shape[0]

    @property
    def hessian_chol(self) -> Optional[np.ndarray]:
        if self.chol is None:
            return None
        return np.tril(self.chol[0])

    @property
    def hessian(self) -> np.ndarray:
        L = self.hessian_chol
        if L is None:
            raise ValueError("model has no cached Hessian factorization")
        return L @ L.T


# ------------------------------------------------------------ per-sample terms

def predict(family: str, X: np.ndarray, theta: np.ndarray) -> np.ndarray:
    z = X @ theta
    return expit(z) if family == "logistic" else z


def losses(family: str, X: np.ndarray, y: np.ndarray, theta: np.ndarray) -> np.ndarray:
    z = X @ theta
    if family == "logistic":
        # -y log s(z) - (1-y) log(1-s(z)) = log(1+e^z) - y z
        return np.logaddexp(0.0, z) - y * z
    return 0.5 * (z - y) ** 2


def residuals(family: str, X: np.ndarray, y: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Scalar r_i with per-sample gradient r_i * x_i."""
    return predict(family, X, theta) - y


def curvatures(family: str, X: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Scalar sigma_i with per-sample Hessian sigma_i * x_i x_i^T."""
    if family == "logistic":
        p = expit(X @ theta)
        return p * (1.0 - p)
    return np.ones(X.shape[0])


def _check_theta(theta, data: Dataset) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (data.d,):
        raise ValueError(f"theta has shape {theta.shape}, data has d={data.d}")
    return theta


def _check_index(data: Dataset, i: int) -> int:
    if not 0 <= i < data.n:
        raise IndexError(f"sample index {i} out of range for n={data.n}")
    return int(i)


def total_loss(model_or_theta, data: Dataset, weights=None, spec: Optional[ModelSpec] = None) -> float:
    """Weighted objective; ``spec`` defaults to the model's own when a model is given."""
    if isinstance(model_or_theta, FittedModel):
        theta, spec = model_or_theta.theta, spec or model_or_theta.spec
    else:
        theta = model_or_theta
    if spec is None:
        raise ValueError("a ModelSpec is required with a bare theta")
    theta = _check_theta(theta, data)
    w = np.ones(data.n) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (data.n,):
        raise ValueError(f"weights have shape {w.shape}, expected ({data.n},)")
    if np.any(w < 0) or np.any(w > 1):
        raise ValueError("weights must lie in [0, 1]")
    ell = losses(spec.family, data.features, data.labels, theta)
    return float(w @ ell + 0.5 * spec.lam * (theta @ theta))


def per_sample_gradient(theta, data: Dataset, i: int, family: str = "logistic") -> np.ndarray:
    theta = _check_theta(theta, data)
    i = _check_index(data, i)
    x = data.features[i]
    r = residuals(family, x[None, :], data.labels[i:i + 1], theta)[0]
    return r * x


def per_sample_hessian_factor(theta, data: Dataset, i: int, family: str = "logistic"):
    """``(sigma, x)`` with the sample Hessian equal to ``sigma * x x^T``."""
    theta = _check_theta(theta, data)
    i = _check_index(data, i)
    x = data.features[i]
    return float(curvatures(family, x[None, :], theta)[0]), x.copy()


def hessian_matrix(family: str, X: np.ndarray, theta: np.ndarray, weights: np.ndarray, lam: float) -> np.ndarray:
    s = weights * curvatures(family, X, theta)
    H = (X * s[:, None]).T @ X
    H[np.diag_indices_from(H)] += lam
    return H


def factorize(H: np.ndarray) -> tuple:
    try:
        c, lower = sla.cho_factor(H, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        raise SolverError("Hessian is singular or indefinite; increase lambda") from None
    if not np.all(np.diag(c) > 0):
        raise SolverError("Hessian factor has a non-positive diagonal")
    return c, lower


# ------------------------------------------------------------------- solver

class _Objective:
    def __init__(self, data: Dataset, spec: ModelSpec, w: np.ndarray):
        self.X, self.y, self.spec, self.w = data.features, data.labels, spec, w

    def value(self, theta):
        ell = losses(self.spec.family, self.X, self.y, theta)
        return float(self.w @ ell + 0.5 * self.spec.lam * (theta @ theta))

    def gradient(self, theta):
        r = residuals(self.spec.family, self.X, self.y, theta)
        return self.X.T @ (self.w * r) + self.spec.lam * theta

    def hessian(self, theta):
        return hessian_matrix(self.spec.family, self.X, theta, self.w, self.spec.lam)


def fit(data: Dataset, spec: ModelSpec, weights=None, warm_start=None,
        tol: float = TOLERANCE, max_iter: int = MAX_ITER) -> FittedModel:
    """Minimize the weighted objective with damped Newton and Armijo backtracking.

    Stops when ``||grad|| <= tol * max(1, ||grad at theta=0||)``.
    """
    w = np.ones(data.n) if weights is None else np.array(weights, dtype=np.float64)
    if w.shape != (data.n,) or np.any(w < 0) or np.any(w > 1):
        raise ValueError("weights must be a length-n vector in [0, 1]")
    obj = _Objective(data, spec, w)
    threshold = tol * max(1.0, float(np.linalg.norm(obj.gradient(np.zeros(data.d)))))
    theta = np.zeros(data.d) if warm_start is None else _check_theta(warm_start, data).copy()

    value = obj.value(theta)
    grad = obj.gradient(theta)
    gnorm = float(np.linalg.norm(grad))
    it = 0
    while gnorm > threshold:
        if it >= max_iter:
            raise SolverError(f"no convergence after {max_iter} Newton iterations "
                              f"(grad norm {gnorm:.3e}, target {threshold:.3e})", gnorm)
        chol = factorize(obj.hessian(theta))
        step = -sla.cho_solve(chol, grad, check_finite=False)
        slope = float(grad @ step)
        # rounding slack so a converged iterate can still take its last step
        slack = 8 * np.finfo(float).eps * max(1.0, abs(value))
        t = 1.0
        while True:
            cand = theta + t * step
            cand_value = obj.value(cand)
            if cand_value <= value + ARMIJO * t * slope + slack:
                break
            t *= SHRINK
            if t < 1e-20:
                raise SolverError(f"line search failed (grad norm {gnorm:.3e})", gnorm)
        theta, value = cand, cand_value
        grad = obj.gradient(theta)
        gnorm = float(np.linalg.norm(grad))
        it += 1

    chol = factorize(obj.hessian(theta))
    return FittedModel(theta, spec, w, gnorm, it, chol)


def refactor(model: FittedModel, data: Dataset) -> FittedModel:
    """Recompute the cached Hessian factorization at ``model.theta``."""
    H = hessian_matrix(model.spec.family, data.features, model.theta, model.weights, model.spec.lam)
    model.chol = factorize(H)
    return model


def accuracy(model: FittedModel, data: Dataset) -> float:
    if data.m == 0:
        return float("nan")
    p = predict(model.spec.family, data.test_features, model.theta)
    return float(np.mean((p >= 0.5) == (data.test_labels == 1.0)))


# ----------------------------------------------------------- serialization

def encode_array(a) -> str:
    return base64.b64encode(np.ascontiguousarray(a, dtype="<f8").tobytes()).decode("ascii")


def decode_array(s: str) -> np.ndarray:
    return np.frombuffer(base64.b64decode(s), dtype="<f8").astype(np.float64)


def model_to_json(model: FittedModel) -> str:
    doc = {
        "family": model.spec.family,
        "lambda": model.spec.lam,
        "d": model.d,
        "theta": encode_array(model.theta),
        "weights": encode_array(model.weights),
        "grad_norm": model.grad_norm,
        "iterations": model.iterations,
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def model_from_json(text: str, data: Dataset) -> FittedModel:
    doc = json.loads(text)
    theta = decode_array(doc["theta"])
    if theta.shape != (data.d,):
        raise ValueError("serialized model does not match data dimension")
    model = FittedModel(theta, ModelSpec(doc["family"], float(doc["lambda"])),
                        decode_array(doc["weights"]), float(doc["grad_norm"]), int(doc["iterations"]))
    return refactor(model, data)
