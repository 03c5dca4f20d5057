import numpy as np
import pytest

from lwrbench.data import CleanDataset
from lwrbench.kernels import KernelKind

from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURE_DIR = REPO_ROOT / "fixtures"
CONFIG_DIR = REPO_ROOT / "configs"

ALL_KERNELS = tuple(KernelKind)
COMPACT_KERNELS = tuple(k for k in KernelKind if k.compact_support)
INFINITE_KERNELS = tuple(k for k in KernelKind if not k.compact_support)


def polynomial_dataset(degree, n=40, p=1, seed=0, name="poly", noise=0.0):
    """CleanDataset whose effort is an exact degree-`degree` polynomial of the
    features (plus optional noise), positive everywhere.

    Features are independently shuffled jittered grids: every neighborhood
    then has well-spread coordinates, so local polynomial systems stay well
    conditioned (clumpy uniform draws can make a cubic local fit singular to
    working precision, which no exact-recovery check can survive).
    """
    rng = np.random.default_rng(seed)
    grid = (np.arange(n) + 0.5) / n
    features = np.empty((n, p))
    for j in range(p):
        jitter = rng.uniform(-0.3, 0.3, n) / n
        features[:, j] = np.clip(rng.permutation(grid + jitter), 0.0, 1.0)
    coeffs = rng.uniform(-3.0, 3.0, size=(p, degree))
    effort = np.full(n, 100.0)
    for j in range(p):
        for t in range(1, degree + 1):
            effort = effort + 10.0 * coeffs[j, t - 1] * features[:, j] ** t
    if noise:
        effort = effort + rng.normal(0.0, noise, size=n)
    assert np.all(effort > 0)
    return CleanDataset(
        name=name,
        features=features,
        efforts=effort,
        feature_names=tuple(f"x{j}" for j in range(p)),
    )


def skewed_dataset(n=12, p=2, seed=0, name="tiny"):
    """Small positive-effort dataset with a noisy nonlinear response."""
    rng = np.random.default_rng(seed)
    features = rng.uniform(0.0, 1.0, size=(n, p))
    effort = 20.0 + 50.0 * features[:, 0] ** 2 + 10.0 * np.exp(rng.normal(0.0, 0.4, n))
    return CleanDataset(
        name=name,
        features=features,
        efforts=effort,
        feature_names=tuple(f"x{j}" for j in range(p)),
    )


@pytest.fixture
def linear_dataset():
    return polynomial_dataset(degree=1, n=40, seed=3, name="linear")
