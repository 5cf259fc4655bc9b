"""Numerical checks of the RIF-vs-NS accuracy bound.

With per-sample Hessians ``H_i = s_i x_i x_i^T`` and gradients ``g_i = r_i x_i``
every quantity in the bound reduces to entries of ``K = X H^{-1} X^T``:

    ||H^{-1/2} g_i||              = |r_i| sqrt(K_ii)
    ||H^{-1/2} H_i H^{-1/2}||     = s_i K_ii = h_i
    ||H_i^{1/2} H^{-1} H_j^{1/2}|| = sqrt(s_i s_j) |K_ij|
    ||H_i^{1/2} H^{-1} g_j||      = sqrt(s_i) |r_j| |K_ij|
    ||H_i^{1/2} H^{-1} grad f||   = sqrt(s_i) |x_i^T H^{-1} grad f|

The regularizer is never removed, so only data samples enter the maxima.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from .attribution import attribute_all, hessian_solve, newton_step
from .dataset import Dataset
from .glm import FittedModel, SolverError, curvatures, residuals
from .metrics import EvaluationFn
from .rng import Stream

PAIR_LIMIT = 5000
BOUND_RTOL = 1e-8
LEMMA_RTOL = 1e-10


def rank1_sqrt(sigma: float, x) -> tuple:
    """``(scale, x)`` with ``(s x x^T)^{1/2} = scale * x x^T``."""
    x = np.asarray(x, dtype=np.float64)
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    norm = float(np.linalg.norm(x))
    if sigma == 0:
        return 0.0, x
    if norm == 0:
        raise ValueError("rank-1 factor with positive sigma needs a nonzero vector")
    return math.sqrt(sigma) / norm, x


@dataclass
class AssumptionConstants:
    c_ell: float
    c_r: float
    delta: float
    epsilon: float
    eta: float
    rows_scanned: int = 0
    sampled: bool = False

    @property
    def k_max(self) -> float:
        return math.inf if self.delta == 0 else 1.0 / (2.0 * self.delta * self.c_r)

    def bound(self, k: float) -> float:
        return k * k * self.eta * (1 + 2 * self.c_r) * (self.epsilon + self.c_r * self.c_ell * self.delta)


def compute_constants(model: FittedModel, data: Dataset, f: EvaluationFn, block: int = 512,
                      pair_limit: int = PAIR_LIMIT, seed: int = 0) -> AssumptionConstants:
    """Exact maxima over all pairs, or over a row sample when ``n > pair_limit``."""
    X = data.features
    fam = model.spec.family
    r = residuals(fam, X, data.labels, model.theta)
    s = curvatures(fam, X, model.theta)
    rs = np.sqrt(s)
    u = hessian_solve(model, f.gradient(model.theta, data, model.spec))
    eta = float(np.max(rs * np.abs(X @ u)))

    n = data.n
    rows = np.arange(n)
    sampled = n > pair_limit
    if sampled:
        rows = np.sort(Stream(seed, "constants").sample(n, pair_limit))
    c_ell = c_r_inv = 0.0
    h_max = 0.0
    delta = eps = 0.0
    absr = np.abs(r)
    for lo in range(0, rows.size, block):
        blk = rows[lo:lo + block]
        K = hessian_solve(model, X[blk].T).T @ X.T  # b x n
        diag = K[np.arange(blk.size), blk]
        c_ell = max(c_ell, float(np.max(absr[blk] * np.sqrt(np.maximum(diag, 0.0)))))
        h_max = max(h_max, float(np.max(s[blk] * diag)))
        A = np.abs(K)
        A[np.arange(blk.size), blk] = 0.0
        delta = max(delta, float(np.max(rs[blk, None] * A * rs[None, :])))
        eps = max(eps, float(np.max(rs[blk, None] * A * absr[None, :])))
    if sampled:
        # leverage and gradient size are per-sample, so scan them fully
        Z = None
        for lo in range(0, n, block):
            Z = hessian_solve(model, X[lo:lo + block].T)
            diag = np.einsum("ij,ji->i", X[lo:lo + block], Z)
            c_ell = max(c_ell, float(np.max(absr[lo:lo + block] * np.sqrt(np.maximum(diag, 0.0)))))
            h_max = max(h_max, float(np.max(s[lo:lo + block] * diag)))
    c_r = 1.0 / (1.0 - h_max) if h_max < 1 else math.inf
    return AssumptionConstants(c_ell, c_r, delta, eps, eta, int(rows.size), sampled)


def _psd_power(M: np.ndarray, p: float) -> np.ndarray:
    w, V = np.linalg.eigh((M + M.T) / 2)
    w = np.clip(w, 0.0, None)
    with np.errstate(divide="ignore"):
        wp = np.where(w > 0, w ** p, 0.0)
    return (V * wp) @ V.T


def dense_constants(model: FittedModel, data: Dataset, f: EvaluationFn) -> AssumptionConstants:
    """All five constants from dense matrices and SVD operator norms.

    Quadratic in n with d x d products per pair: for small checks only.
    """
    X = data.features
    fam = model.spec.family
    H = model.hessian
    Hinv = np.linalg.inv(H)
    H_mhalf = _psd_power(H, -0.5)
    r = residuals(fam, X, data.labels, model.theta)
    s = curvatures(fam, X, model.theta)
    G = r[:, None] * X
    Hi = [s[i] * np.outer(X[i], X[i]) for i in range(data.n)]
    Hi_half = [_psd_power(M, 0.5) for M in Hi]
    grad_f = f.gradient(model.theta, data, model.spec)
    op = lambda M: float(np.linalg.norm(M, 2))
    c_ell = max(float(np.linalg.norm(H_mhalf @ g)) for g in G)
    c_r = max(1.0 / (1.0 - op(H_mhalf @ M @ H_mhalf)) for M in Hi)
    eta = max(float(np.linalg.norm(B @ Hinv @ grad_f)) for B in Hi_half)
    delta = eps = 0.0
    for i in range(data.n):
        left = Hi_half[i] @ Hinv
        for j in range(data.n):
            if i == j:
                continue
            delta = max(delta, op(left @ Hi_half[j]))
            eps = max(eps, float(np.linalg.norm(left @ G[j])))
    return AssumptionConstants(c_ell, c_r, delta, eps, eta, data.n, False)


# ------------------------------------------------------------------ bound

@dataclass
class BoundReport:
    k: int
    k_max: float
    bound: float
    observed_gap: float
    satisfied: bool
    reason: str = ""
    trials: int = 0
    skipped: int = 0
    gaps: List[float] = field(default_factory=list)
    constants: Optional[AssumptionConstants] = None

    def to_dict(self, with_gaps: bool = False) -> dict:
        d = asdict(self)
        if not with_gaps:
            d.pop("gaps")
        return d


def _gap(model, data, table, grad_f, idx) -> float:
    ns = newton_step(model, data, idx)
    rif = table.rif_vectors[idx].sum(axis=0)
    return abs(float(grad_f @ (ns.delta_theta - rif)))


def verify_theorem1(model: FittedModel, data: Dataset, f: EvaluationFn, k: int, trials: int = 200,
                    seed: int = 0, constants: Optional[AssumptionConstants] = None,
                    table=None) -> BoundReport:
    """Max RIF-vs-NS gap on ``<grad f, .>`` over random k-subsets, against the bound.

    Singletons are identical by construction, so k <= 1 has gap 0 without
    sampling.
    """
    c = constants or compute_constants(model, data, f)
    k_max = c.k_max
    bound = c.bound(k)
    if k > k_max:
        return BoundReport(k, k_max, bound, math.nan, False, "budget exceeds threshold", constants=c)
    if k <= 1:
        return BoundReport(k, k_max, bound, 0.0, True, "", trials, 0, [], c)
    table = table if table is not None else attribute_all(model, data)
    grad_f = f.gradient(model.theta, data, model.spec)
    gaps, skipped = [], 0
    for t in range(trials):
        idx = np.sort(Stream(seed, "theorem1", k, t).sample(data.n, k))
        try:
            gaps.append(_gap(model, data, table, grad_f, idx))
        except SolverError:
            skipped += 1
    observed = max(gaps) if gaps else 0.0
    ok = observed <= bound * (1 + BOUND_RTOL)
    return BoundReport(k, k_max, bound, observed, ok, "" if ok else "bound violated",
                       trials, skipped, gaps, c)


# ------------------------------------------------------------------ lemma

@dataclass
class LemmaReport:
    trials: int
    violations: int
    ratios: List[float]
    histogram: List[int]
    bin_edges: List[float]

    @property
    def holds(self) -> bool:
        return self.violations == 0


def lemma_instance(rng: Stream, k: int, d: int, shared_direction: bool = False):
    """Random SPD ``H`` with spectrum in [1, 10] and k random rank-1 PSD matrices."""
    Q, R = np.linalg.qr(rng.normal((d, d)))
    Q = Q * np.sign(np.diag(R))
    eig = 1.0 + 9.0 * rng.uniform(d)
    H = (Q * eig) @ Q.T
    if shared_direction:
        x = rng.normal(d)
        vecs = [c * x for c in rng.normal(k)]
    else:
        scale = rng.uniform(k) * 2.0
        vecs = [scale[i] * rng.normal(d) for i in range(k)]
    return H, [np.outer(a, a) for a in vecs]


def lemma_sides(H: np.ndarray, A: list) -> tuple:
    """``(lhs, rhs, sigma)`` from dense eigensolves."""
    H_mhalf = _psd_power(H, -0.5)
    Hinv = np.linalg.inv(H)
    roots = [_psd_power(Ai, 0.5) for Ai in A]
    parts = [H_mhalf @ Ai @ H_mhalf for Ai in A]
    sigma = max(float(np.max(np.abs(np.linalg.eigvalsh((P + P.T) / 2)))) for P in parts)
    total = sum(parts)
    lhs = float(np.max(np.abs(np.linalg.eigvalsh((total + total.T) / 2))))
    off = 0.0
    for i in range(len(A)):
        for j in range(len(A)):
            if i != j:
                off += float(np.linalg.norm(roots[i] @ Hinv @ roots[j], 2)) ** 2
    return lhs, sigma + math.sqrt(off), sigma


def verify_lemma_psd_sum(trials: int = 1000, seed: int = 0, max_k: int = 20, max_d: int = 40,
                         bins: int = 10) -> LemmaReport:
    ratios, violations = [], 0
    for t in range(trials):
        rng = Stream(seed, "lemma", t)
        k = 1 + rng.integer(max_k)
        d = 2 + rng.integer(max_d - 1)
        H, A = lemma_instance(rng, k, d, shared_direction=(t % 10 == 9))
        lhs, rhs, _ = lemma_sides(H, A)
        if lhs > rhs * (1 + LEMMA_RTOL):
            violations += 1
        ratios.append(lhs / rhs if rhs > 0 else 1.0)
    hist, edges = np.histogram(ratios, bins=bins, range=(0.0, 1.0 + LEMMA_RTOL))
    return LemmaReport(trials, violations, ratios, hist.tolist(), edges.tolist())


# -------------------------------------------------------------------- SNR

@dataclass
class SNRReport:
    k: int
    snr: float
    signal: float
    noise: float
    reference: float


def snr_estimate(model: FittedModel, data: Dataset, f: EvaluationFn, k: int, trials: int = 200,
                 seed: int = 0, table=None) -> SNRReport:
    """Largest |RIF effect| over k-subsets divided by the largest sampled RIF-NS gap.

    ``reference`` is ``n / (k sqrt(d))``. Returns ``snr = inf`` when the gap
    vanishes, which is always the case for k <= 1.
    """
    table = table if table is not None else attribute_all(model, data)
    grad_f = f.gradient(model.theta, data, model.spec)
    effects = np.sort(table.rif_vectors @ grad_f)
    signal = max(abs(float(effects[-k:].sum())), abs(float(effects[:k].sum()))) if k > 0 else 0.0
    reference = data.n / (k * math.sqrt(data.d)) if k > 0 else math.inf
    if k <= 1:
        return SNRReport(k, math.inf, signal, 0.0, reference)
    noise = 0.0
    for t in range(trials):
        idx = np.sort(Stream(seed, "snr", k, t).sample(data.n, k))
        try:
            noise = max(noise, _gap(model, data, table, grad_f, idx))
        except SolverError:
            continue
    return SNRReport(k, signal / noise if noise > 0 else math.inf, signal, noise, reference)
