"""Local polynomial regression around a query point.

A prediction is produced by taking the k nearest training rows (k set by the
bandwidth as a fraction of the training size), weighting them with a kernel
over distance normalized by the neighborhood radius, fitting a weighted
polynomial least-squares model, and evaluating it at the query.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg.lapack import dgetrf, dgetrs

from .kernels import KernelKind, neighborhood_weights

__all__ = [
    "TrainingSet",
    "VariantConfig",
    "Neighborhood",
    "LocalFit",
    "euclidean_distances",
    "neighborhood_size",
    "find_neighborhood",
    "polynomial_design",
    "weighted_least_squares",
    "predict",
]

#: Ridge term added to the normal-equations diagonal when the solve is singular.
RIDGE_LAMBDA = 1e-8
#: A diagonal pivot below this magnitude marks the system as near-singular.
PIVOT_TOLERANCE = 1e-10
#: Radius floor used when all k neighbors coincide with the query.
RADIUS_FLOOR = 1e-12

VALID_DEGREES = (1, 2, 3)


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """Immutable feature matrix plus effort vector.

    Features are expected (not enforced) to be min-max scaled to [0, 1];
    efforts stay in raw units.
    """

    features: np.ndarray
    efforts: np.ndarray

    def __post_init__(self):
        features = np.array(self.features, dtype=float)
        efforts = np.array(self.efforts, dtype=float)
        if features.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        if features.shape[0] < 2:
            raise ValueError("training set needs at least 2 rows")
        if features.shape[1] < 1:
            raise ValueError("training set needs at least 1 feature")
        if efforts.ndim != 1 or efforts.shape[0] != features.shape[0]:
            raise ValueError("efforts length must match feature row count")
        if not np.all(np.isfinite(features)) or not np.all(np.isfinite(efforts)):
            raise ValueError("training data must be finite")
        features.flags.writeable = False
        efforts.flags.writeable = False
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "efforts", efforts)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class VariantConfig:
    """One model configuration: kernel, bandwidth fraction and polynomial degree."""

    kernel: KernelKind
    bandwidth: float
    degree: int

    def __post_init__(self):
        if not isinstance(self.kernel, KernelKind):
            raise ValueError("kernel must be a KernelKind")
        if not (0.0 < self.bandwidth <= 1.0):
            raise ValueError("bandwidth must lie in (0, 1]")
        if self.degree not in VALID_DEGREES:
            raise ValueError(f"degree must be one of {VALID_DEGREES}")

    @property
    def key(self) -> tuple[str, float, int]:
        return (self.kernel.value, self.bandwidth, self.degree)


@dataclass(frozen=True, eq=False)
class Neighborhood:
    """k nearest training rows: indices, ascending distances and the radius."""

    indices: np.ndarray
    distances: np.ndarray
    radius: float


@dataclass(frozen=True, eq=False)
class LocalFit:
    """Coefficients of one weighted least-squares fit."""

    coefficients: np.ndarray
    ridge_used: bool

    def predict(self, design_rows: np.ndarray) -> np.ndarray:
        return np.asarray(design_rows, dtype=float) @ self.coefficients


def euclidean_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise Euclidean distances between rows of a (m, p) and b (n, p).

    Single shared implementation so every caller sees bit-identical values.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("mnp,mnp->mn", diff, diff))


def neighborhood_size(n: int, bandwidth: float, min_size: int = 2) -> int:
    """k = max(min_size, ceil(n * bandwidth)), capped at n.

    The product is rounded to 12 decimals before ceil so binary-float noise
    (5 * 0.4 = 2.0000000000000004) cannot inflate k.
    """
    if not (0.0 < bandwidth <= 1.0):
        raise ValueError("bandwidth must lie in (0, 1]")
    k = max(min_size, math.ceil(round(n * bandwidth, 12)))
    return min(k, n)


def find_neighborhood(
    train: TrainingSet, query, bandwidth: float, min_size: int = 2
) -> Neighborhood:
    """Locate the k nearest training rows around the query.

    Ties on distance break by ascending row index.  The radius is the k-th
    distance, floored at RADIUS_FLOOR when the whole neighborhood coincides
    with the query.
    """
    q = np.asarray(query, dtype=float)
    if q.shape != (train.p,):
        raise ValueError(f"query must have {train.p} features, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("query must be finite")
    k = neighborhood_size(train.n, bandwidth, min_size)
    dists = euclidean_distances(q[None, :], train.features)[0]
    order = np.argsort(dists, kind="stable")[:k]
    nd = dists[order]
    radius = float(nd[-1])
    if radius <= 0.0:
        radius = RADIUS_FLOOR
    return Neighborhood(indices=order, distances=nd, radius=radius)


def polynomial_design(rows, degree: int) -> np.ndarray:
    """Design matrix with an intercept and per-feature powers 1..degree.

    A row (x_1, .., x_p) becomes (1, x_1, .., x_1^d, .., x_p, .., x_p^d);
    there are no cross terms.  1-D input is treated as a single row and
    returns a 1-D design row.
    """
    if degree not in VALID_DEGREES:
        raise ValueError(f"degree must be one of {VALID_DEGREES}")
    x = np.asarray(rows, dtype=float)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    m, p = x.shape
    out = np.empty((m, 1 + p * degree), dtype=float)
    out[:, 0] = 1.0
    for j in range(p):
        col = x[:, j]
        acc = col.copy()
        for t in range(degree):
            out[:, 1 + j * degree + t] = acc
            if t + 1 < degree:
                acc = acc * col
    return out[0] if squeeze else out


def _solve_normal_equations(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, bool]:
    # Symmetric diagonal equilibration tames the poor scaling of monomial
    # bases on narrow neighborhoods, and one iterative-refinement step
    # recovers near-machine accuracy; a pivot of the equilibrated matrix
    # below tolerance marks the system near-singular and falls back to the
    # ridge solve.  Returns (coefficients, ridge_used).
    diag = np.sqrt(np.abs(np.diag(a)))
    diag[diag == 0.0] = 1.0
    scale = 1.0 / diag
    a_eq = a * scale[:, None] * scale[None, :]
    lu, piv, info = dgetrf(a_eq)
    if info == 0:
        min_pivot = float(np.min(np.abs(np.diag(lu))))
        if min_pivot >= PIVOT_TOLERANCE:
            z, solve_info = dgetrs(lu, piv, b * scale)
            if solve_info == 0:
                coef = z * scale
                if min_pivot < 1e-3:  # refinement only pays off when ill-conditioned
                    residual = b - a @ coef
                    correction, refine_info = dgetrs(lu, piv, residual * scale)
                    if refine_info == 0:
                        coef = coef + correction * scale
                if np.all(np.isfinite(coef)):
                    return coef, False
    ridged = a + RIDGE_LAMBDA * np.eye(a.shape[0])
    return np.linalg.solve(ridged, b), True


def weighted_least_squares(design, targets, weights) -> LocalFit:
    """Solve the weighted normal equations (X'WX) beta = X'Wy.

    If the factorization shows a diagonal pivot below PIVOT_TOLERANCE the
    system is re-solved with a ridge term RIDGE_LAMBDA on the diagonal and
    the fit is flagged ridge_used.
    """
    x = np.asarray(design, dtype=float)
    y = np.asarray(targets, dtype=float)
    w = np.asarray(weights, dtype=float)
    if x.ndim != 2:
        raise ValueError("design must be a 2-D matrix")
    if y.shape != (x.shape[0],) or w.shape != (x.shape[0],):
        raise ValueError("targets and weights must match the design row count")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y)) and np.all(np.isfinite(w))):
        raise ValueError("weighted least squares inputs must be finite")
    if np.any(w < 0.0):
        raise ValueError("weights must be >= 0")
    if not np.any(w > 0.0):
        raise ValueError("weights must not be all zero")

    xw = x * w[:, None]
    coef, ridge_used = _solve_normal_equations(x.T @ xw, xw.T @ y)
    return LocalFit(coefficients=coef, ridge_used=ridge_used)


def predict(train: TrainingSet, config: VariantConfig, query) -> float:
    """Predict the effort at one query point.

    Composes neighborhood search, kernel weighting, the polynomial design and
    the weighted least-squares solve; deterministic for fixed inputs.  The
    neighborhood is floored at degree + 1 rows so the local system is not
    trivially underdetermined.
    """
    nbhd = find_neighborhood(
        train, query, config.bandwidth, min_size=max(2, config.degree + 1)
    )
    w = neighborhood_weights(config.kernel, nbhd.distances, nbhd.radius)
    design = polynomial_design(train.features[nbhd.indices], config.degree)
    fit = weighted_least_squares(design, train.efforts[nbhd.indices], w)
    q_row = polynomial_design(np.asarray(query, dtype=float), config.degree)
    return float(q_row @ fit.coefficients)
