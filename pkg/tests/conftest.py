import numpy as np
import pytest

from rifkit.dataset import Dataset, SyntheticSpec, synthesize
from rifkit.glm import ModelSpec, fit


def logistic_instance(n=200, d=20, seed=0, lam=1e-2, signal=2.0):
    data = synthesize(SyntheticSpec(n=n, d=d, signal=signal, seed=seed))
    model = fit(data, ModelSpec("logistic", lam))
    return data, model


def ridge_instance(n=120, d=10, seed=0, lam=1e-1, noise=0.5):
    data = synthesize(SyntheticSpec(n=n, d=d, label_model="linear", noise=noise, seed=seed))
    model = fit(data, ModelSpec("least-squares", lam))
    return data, model


def identity_design(d=4, y=None):
    """Least-squares with X = I_d, lambda = 1, so H = 2I."""
    X = np.eye(d)
    y = np.zeros(d) if y is None else np.asarray(y, dtype=float)
    data = Dataset(X, y, np.zeros((0, d)), np.zeros(0), "identity", binary=False)
    return data, fit(data, ModelSpec("least-squares", 1.0))


@pytest.fixture(scope="module")
def small_logistic():
    return logistic_instance()


@pytest.fixture(scope="module")
def small_ridge():
    return ridge_instance()


def central_gradient(fun, theta, step=1e-6):
    g = np.empty_like(theta)
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = step
        g[j] = (fun(theta + e) - fun(theta - e)) / (2 * step)
    return g


def central_hessian(grad, theta, step=1e-5):
    """Symmetrized central differences of an analytic gradient."""
    d = theta.size
    H = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = step
        H[:, j] = (grad(theta + e) - grad(theta - e)) / (2 * step)
    return (H + H.T) / 2


FEATURE_TRACE = 0.01


def scaled_logistic_data(n, d, seed, trace=FEATURE_TRACE, margin=2.0):
    """Gaussian features with total variance ``trace`` and logits of std ``margin``.

    Row norms near sqrt(trace) keep leverages moderate instead of pushing the
    model into the separable, interpolating regime.
    """
    spectrum = (trace / d,) * d
    return synthesize(SyntheticSpec(n=n, d=d, design="gaussian-anisotropic", spectrum=spectrum,
                                    signal=margin * np.sqrt(d / trace), seed=seed))


# one line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
