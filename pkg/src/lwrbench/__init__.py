"""Locally weighted regression with ten kernel smoothers, plus a benchmark
harness: repeated 10-fold cross-validation over a kernel/bandwidth/degree
grid, MAE aggregation and Scott-Knott significance ranking."""

__version__ = "0.1.0"

from .kernels import KernelKind, evaluate_kernel, neighborhood_weights
from .lwr import TrainingSet, VariantConfig, predict

__all__ = [
    "__version__",
    "KernelKind",
    "evaluate_kernel",
    "neighborhood_weights",
    "TrainingSet",
    "VariantConfig",
    "predict",
]
