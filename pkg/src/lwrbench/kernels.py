"""Kernel smoothers that turn normalized neighbor distances into regression weights.

Every kernel maps a normalized distance h = distance / radius (h >= 0) to a
nonnegative weight K(h).  Seven kernels have compact support and return 0 for
h > 1; Gaussian, Logistic and Sigmoid have infinite support.  Rectangular is
the only uniform kernel: inside its support every neighbor gets the same
weight.
"""

from __future__ import annotations

import enum
import math
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "KernelKind",
    "KERNEL_NAMES",
    "parse_kernel",
    "evaluate_kernel",
    "neighborhood_weights",
    "kernel_formula",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class KernelKind(enum.Enum):
    """The ten supported kernel smoothers, keyed by their CLI identifiers."""

    RECTANGULAR = "rectangular"
    EPANECHNIKOV = "epanechnikov"
    TRICUBE = "tricube"
    GAUSSIAN = "gaussian"
    TRIANGLE = "triangle"
    TRIWEIGHT = "triweight"
    BIWEIGHT = "biweight"
    COSINE = "cosine"
    LOGISTIC = "logistic"
    SIGMOID = "sigmoid"

    @property
    def uniform(self) -> bool:
        """True when every neighbor inside the support gets the same weight."""
        return self is KernelKind.RECTANGULAR

    @property
    def compact_support(self) -> bool:
        """True when K(h) = 0 for every h > 1."""
        return self not in _INFINITE_SUPPORT

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


_INFINITE_SUPPORT = frozenset(
    {KernelKind.GAUSSIAN, KernelKind.LOGISTIC, KernelKind.SIGMOID}
)

#: Canonical lowercase identifiers, in declaration order.
KERNEL_NAMES: tuple[str, ...] = tuple(kind.value for kind in KernelKind)


def parse_kernel(name: str) -> KernelKind:
    """Resolve a lowercase kernel identifier to its :class:`KernelKind`."""
    try:
        return KernelKind(name)
    except ValueError:
        raise ValueError(
            f"unknown kernel {name!r}; expected one of: {', '.join(KERNEL_NAMES)}"
        ) from None


def _truncated(formula: Callable[[np.ndarray], np.ndarray]) -> Callable[[np.ndarray], np.ndarray]:
    # Clip before evaluating so the unused h > 1 branch cannot overflow.
    def kernel(h: np.ndarray) -> np.ndarray:
        inside = np.minimum(h, 1.0)
        return np.where(h <= 1.0, formula(inside), 0.0)

    return kernel


def _gaussian(h: np.ndarray) -> np.ndarray:
    return np.exp(-0.5 * h * h) / _SQRT_2PI


def _logistic(h: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return 1.0 / (np.exp(h) + 2.0 + np.exp(-h))


def _sigmoid(h: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return (2.0 / math.pi) / (np.exp(h) + np.exp(-h))


_FORMULAS: dict[KernelKind, Callable[[np.ndarray], np.ndarray]] = {
    KernelKind.RECTANGULAR: _truncated(lambda h: np.full_like(h, 0.5)),
    KernelKind.EPANECHNIKOV: _truncated(lambda h: 0.75 * (1.0 - h * h)),
    KernelKind.TRICUBE: _truncated(lambda h: (70.0 / 81.0) * (1.0 - h**3) ** 3),
    KernelKind.GAUSSIAN: _gaussian,
    KernelKind.TRIANGLE: _truncated(lambda h: 1.0 - h),
    KernelKind.TRIWEIGHT: _truncated(lambda h: (35.0 / 32.0) * (1.0 - h * h) ** 3),
    KernelKind.BIWEIGHT: _truncated(lambda h: (15.0 / 16.0) * (1.0 - h * h) ** 2),
    KernelKind.COSINE: _truncated(lambda h: (math.pi / 4.0) * np.cos((math.pi / 2.0) * h)),
    KernelKind.LOGISTIC: _logistic,
    KernelKind.SIGMOID: _sigmoid,
}

#: Human-readable formulas for the CLI listing.
_FORMULA_TEXT: dict[KernelKind, str] = {
    KernelKind.RECTANGULAR: "K(h) = 0.5",
    KernelKind.EPANECHNIKOV: "K(h) = 3/4 (1 - h^2)",
    KernelKind.TRICUBE: "K(h) = 70/81 (1 - h^3)^3",
    KernelKind.GAUSSIAN: "K(h) = exp(-h^2/2) / sqrt(2 pi)",
    KernelKind.TRIANGLE: "K(h) = 1 - h",
    KernelKind.TRIWEIGHT: "K(h) = 35/32 (1 - h^2)^3",
    KernelKind.BIWEIGHT: "K(h) = 15/16 (1 - h^2)^2",
    KernelKind.COSINE: "K(h) = pi/4 cos(pi h / 2)",
    KernelKind.LOGISTIC: "K(h) = 1 / (exp(h) + 2 + exp(-h))",
    KernelKind.SIGMOID: "K(h) = 2/pi / (exp(h) + exp(-h))",
}


def kernel_formula(kind: KernelKind) -> str:
    """Display formula for one kernel (compact kernels are 0 for h > 1)."""
    text = _FORMULA_TEXT[kind]
    if kind.compact_support:
        text += " for h <= 1, else 0"
    return text


def evaluate_kernel(kind: KernelKind, h):
    """Evaluate K(h) for a scalar or array of normalized distances.

    h must be finite and >= 0.  Returns a float for scalar input, an ndarray
    otherwise; the result is always >= 0.
    """
    arr = np.asarray(h, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("normalized distance must be finite")
    if np.any(arr < 0.0):
        raise ValueError("normalized distance must be >= 0")
    values = _FORMULAS[kind](arr)
    if arr.ndim == 0:
        return float(values)
    return values


def _weights_core(kind: KernelKind, h: np.ndarray) -> np.ndarray:
    # Trusted path: h already validated to be finite, >= 0 and <= 1.
    weights = _FORMULAS[kind](h)
    if not np.any(weights > 0.0):
        return np.full(h.shape, 1.0 / h.size)
    return weights


def neighborhood_weights(
    kind: KernelKind, distances: Sequence[float], radius: float
) -> np.ndarray:
    """Kernel weights for a neighborhood of raw distances.

    Each weight is K(d_i / radius).  radius must be positive and at least
    max(distances) so normalized distances stay inside [0, 1].  If every
    weight is exactly 0 (a boundary case of compact kernels, e.g. when all
    neighbors sit on the radius), falls back to uniform weights 1/k so a
    prediction always exists.
    """
    d = np.asarray(distances, dtype=float)
    if d.size == 0:
        raise ValueError("distances must be nonempty")
    if not np.all(np.isfinite(d)) or np.any(d < 0.0):
        raise ValueError("distances must be finite and >= 0")
    if not (np.isfinite(radius) and radius > 0.0):
        raise ValueError("radius must be positive and finite")
    if float(np.max(d)) > radius:
        raise ValueError("radius must be >= max(distances)")
    return _weights_core(kind, d / radius)
