"""Repeated k-fold cross-validation over the variant grid, with MAE records.

The fold plan for a dataset is shared by every variant evaluated on it, so
all variants see identical train/test splits.  Shuffles use SplitMix64 +
Fisher-Yates, so plans reproduce bit-for-bit across platforms.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from functools import lru_cache
from multiprocessing import get_context
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import t as student_t

from .kernels import _weights_core
from .lwr import (
    RADIUS_FLOOR,
    VariantConfig,
    _solve_normal_equations,
    euclidean_distances,
    neighborhood_size,
    polynomial_design,
)

__all__ = [
    "FoldPlan",
    "MaeRecord",
    "VariantFailure",
    "GridResult",
    "shuffled_indices",
    "make_fold_plan",
    "mae",
    "run_variant",
    "run_grid",
    "aggregate_mae",
    "mean_ci95",
    "grid_csv_lines",
    "write_grid_csv",
    "read_grid_csv",
]

GRID_CSV_HEADER = "dataset,kernel,bandwidth,degree,repeat,fold,mae"

_MASK64 = (1 << 64) - 1


class _SplitMix64:
    """Tiny portable PRNG; the documented shuffle source for fold plans."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        # Rejection sampling keeps the draw exactly uniform on [0, bound).
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            z = self.next_u64()
            if z < limit:
                return z % bound


def shuffled_indices(n: int, seed: int) -> list[int]:
    """Fisher-Yates shuffle of range(n), seeded deterministically."""
    rng = _SplitMix64(seed)
    idx = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        idx[i], idx[j] = idx[j], idx[i]
    return idx


@dataclass(frozen=True)
class FoldPlan:
    """Per-repeat partitions of 0..n-1 into disjoint test folds."""

    n: int
    folds: int
    repeats: int
    seed: int
    assignment: tuple[tuple[tuple[int, ...], ...], ...]

    def test_indices(self, repeat: int, fold: int) -> np.ndarray:
        return np.array(self.assignment[repeat][fold], dtype=int)

    def train_indices(self, repeat: int, fold: int) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[self.test_indices(repeat, fold)] = False
        return np.flatnonzero(mask)


def make_fold_plan(n: int, folds: int = 10, repeats: int = 10, seed: int = 1) -> FoldPlan:
    """Build the shared cross-validation plan.

    Each repeat r shuffles 0..n-1 with seed + r and deals the result
    round-robin into `folds` test sets, so fold sizes differ by at most one.
    Identical arguments reproduce the identical plan.
    """
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if n < folds:
        raise ValueError(f"need at least {folds} rows for {folds}-fold CV, got {n}")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    assignment = []
    for r in range(repeats):
        order = shuffled_indices(n, (seed + r) & _MASK64)
        folds_r = tuple(tuple(sorted(order[f::folds])) for f in range(folds))
        assignment.append(folds_r)
    return FoldPlan(n=n, folds=folds, repeats=repeats, seed=seed, assignment=tuple(assignment))


@dataclass(frozen=True)
class MaeRecord:
    """One measured outcome: (dataset, variant, repeat, fold) -> MAE."""

    dataset: str
    config: VariantConfig
    repeat: int
    fold: int
    mae: float

    @property
    def key(self) -> tuple:
        return (self.dataset, *self.config.key, self.repeat, self.fold)


@dataclass(frozen=True)
class VariantFailure:
    dataset: str
    config: VariantConfig
    message: str


@dataclass(frozen=True)
class GridResult:
    """All MAE records of a grid run plus any per-variant failures."""

    records: tuple[MaeRecord, ...]
    failures: tuple[VariantFailure, ...] = field(default_factory=tuple)


class VariantEvaluationError(RuntimeError):
    """A model error annotated with its (dataset, variant, repeat, fold) context."""


def mae(actual, predicted) -> float:
    """Mean absolute error between two equal-length effort vectors."""
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.size == 0:
        raise ValueError("mae needs at least one value")
    if a.shape != p.shape:
        raise ValueError("actual and predicted lengths differ")
    value = float(np.mean(np.abs(a - p)))
    if not math.isfinite(value):
        raise ValueError("mae inputs must be finite")
    return value


@dataclass(frozen=True, eq=False)
class PreparedDataset:
    """Cached pairwise distances and design matrices for one dataset."""

    features: np.ndarray
    efforts: np.ndarray
    distances: np.ndarray
    designs: Mapping[int, np.ndarray]


def prepare_dataset(features: np.ndarray, efforts: np.ndarray, degrees: Iterable[int]) -> PreparedDataset:
    features = np.asarray(features, dtype=float)
    efforts = np.asarray(efforts, dtype=float)
    return PreparedDataset(
        features=features,
        efforts=efforts,
        distances=euclidean_distances(features, features),
        designs={d: polynomial_design(features, d) for d in sorted(set(degrees))},
    )


def _predict_rows(
    config: VariantConfig,
    dist_rows: np.ndarray,
    design_train: np.ndarray,
    y_train: np.ndarray,
    design_test: np.ndarray,
) -> np.ndarray:
    """Predict every test row from precomputed distances and designs.

    Composes the same arithmetic as lwr.predict (same distance values, same
    stable sort, same solver expressions), skipping only the per-call input
    validation, so the two paths agree bit-for-bit.
    """
    kernel = config.kernel
    n_train = y_train.shape[0]
    k = neighborhood_size(n_train, config.bandwidth, max(2, config.degree + 1))
    preds = np.empty(dist_rows.shape[0], dtype=float)
    for i in range(dist_rows.shape[0]):
        order = np.argsort(dist_rows[i], kind="stable")[:k]
        nd = dist_rows[i][order]
        radius = float(nd[-1])
        if radius <= 0.0:
            radius = RADIUS_FLOOR
        w = _weights_core(kernel, nd / radius)
        x = design_train[order]
        xw = x * w[:, None]
        coef, _ = _solve_normal_equations(x.T @ xw, xw.T @ y_train[order])
        preds[i] = design_test[i] @ coef
    return preds


def _scale_fold(features: np.ndarray, train_idx: np.ndarray) -> np.ndarray:
    # Strict mode: refit min-max on the training fold only.  Columns constant
    # within the fold map to 0 everywhere.
    sub = features[train_idx]
    lo = sub.min(axis=0)
    hi = sub.max(axis=0)
    span = hi - lo
    safe = np.where(span > 0.0, span, 1.0)
    scaled = (features - lo) / safe
    scaled[:, span == 0.0] = 0.0
    return scaled


def _fold_mae(
    prep: PreparedDataset,
    config: VariantConfig,
    train_idx: np.ndarray,
    test_idx: np.ndarray,
    strict_scaling: bool,
) -> float:
    if strict_scaling:
        scaled = _scale_fold(prep.features, train_idx)
        dist_rows = euclidean_distances(scaled[test_idx], scaled[train_idx])
        design_train = polynomial_design(scaled[train_idx], config.degree)
        design_test = polynomial_design(scaled[test_idx], config.degree)
    else:
        dist_rows = prep.distances[test_idx[:, None], train_idx]
        design = prep.designs[config.degree]
        design_train = design[train_idx]
        design_test = design[test_idx]
    preds = _predict_rows(config, dist_rows, design_train, prep.efforts[train_idx], design_test)
    return mae(prep.efforts[test_idx], preds)


@lru_cache(maxsize=16)
def _plan_splits(plan: FoldPlan) -> tuple:
    # (repeat, fold, train indices, test indices) for every cell; shared by
    # all variants evaluated under the same plan.
    splits = []
    for r in range(plan.repeats):
        for f in range(plan.folds):
            test = np.array(plan.assignment[r][f], dtype=np.intp)
            mask = np.ones(plan.n, dtype=bool)
            mask[test] = False
            splits.append((r, f, np.flatnonzero(mask), test))
    return tuple(splits)


def run_variant(
    clean,
    config: VariantConfig,
    plan: FoldPlan,
    *,
    strict_scaling: bool = False,
    prepared: PreparedDataset | None = None,
) -> list[MaeRecord]:
    """Evaluate one variant under the shared fold plan: one MAE per (repeat, fold)."""
    if plan.n != clean.features.shape[0]:
        raise ValueError("fold plan size does not match dataset size")
    prep = prepared
    if prep is None or config.degree not in prep.designs:
        prep = prepare_dataset(clean.features, clean.efforts, [config.degree])
    records = []
    for r, f, train_idx, test_idx in _plan_splits(plan):
        try:
            value = _fold_mae(prep, config, train_idx, test_idx, strict_scaling)
        except Exception as err:
            raise VariantEvaluationError(
                f"dataset={clean.name} kernel={config.kernel.value} "
                f"bandwidth={config.bandwidth!r} degree={config.degree} "
                f"repeat={r} fold={f}: {err}"
            ) from err
        records.append(
            MaeRecord(dataset=clean.name, config=config, repeat=r, fold=f, mae=value)
        )
    return records


def _fingerprint(features: np.ndarray, efforts: np.ndarray) -> str:
    digest = hashlib.blake2b(digest_size=16)
    digest.update(np.ascontiguousarray(features).tobytes())
    digest.update(np.ascontiguousarray(efforts).tobytes())
    return digest.hexdigest()


_WORKER_PREP_CACHE: dict[str, PreparedDataset] = {}


def _grid_task(payload):
    clean, config, plan, strict_scaling, degrees = payload
    key = _fingerprint(clean.features, clean.efforts)
    prep = _WORKER_PREP_CACHE.get(key)
    if prep is None:
        _WORKER_PREP_CACHE.clear()  # keep at most one dataset per worker
        prep = prepare_dataset(clean.features, clean.efforts, degrees)
        _WORKER_PREP_CACHE[key] = prep
    try:
        records = run_variant(
            clean, config, plan, strict_scaling=strict_scaling, prepared=prep
        )
    except VariantEvaluationError as err:
        return VariantFailure(dataset=clean.name, config=config, message=str(err))
    return records


def run_grid(
    datasets: Sequence,
    kernels: Sequence,
    bandwidths: Sequence[float],
    degrees: Sequence[int],
    seed: int,
    *,
    folds: int = 10,
    repeats: int = 10,
    workers: int = 1,
    strict_scaling: bool = False,
) -> GridResult:
    """Run the full datasets x kernels x bandwidths x degrees cross product.

    Every variant on a dataset shares that dataset's fold plan.  Failing
    variants are recorded and the grid continues.  Output is a pure function
    of (datasets, axes, seed); worker count never changes it.
    """
    for axis_name, axis in (
        ("datasets", datasets),
        ("kernels", kernels),
        ("bandwidths", bandwidths),
        ("degrees", degrees),
    ):
        if len(axis) == 0:
            raise ValueError(f"{axis_name} axis must be nonempty")
        if len(set(axis if axis_name != "datasets" else [d.name for d in axis])) != len(axis):
            raise ValueError(f"{axis_name} axis must not contain duplicates")
    if workers < 1:
        raise ValueError("workers must be >= 1")

    plans = {ds.name: make_fold_plan(ds.features.shape[0], folds, repeats, seed) for ds in datasets}
    configs = [
        VariantConfig(kernel=k, bandwidth=b, degree=d)
        for k in kernels
        for b in bandwidths
        for d in degrees
    ]
    tasks = [
        (ds, cfg, plans[ds.name], strict_scaling, tuple(degrees))
        for ds in datasets
        for cfg in configs
    ]

    if workers == 1:
        outcomes = [_grid_task(task) for task in tasks]
    else:
        ctx = get_context()
        with ctx.Pool(processes=workers) as pool:
            outcomes = pool.map(_grid_task, tasks, chunksize=1)

    records: list[MaeRecord] = []
    failures: list[VariantFailure] = []
    for outcome in outcomes:
        if isinstance(outcome, VariantFailure):
            failures.append(outcome)
        else:
            records.extend(outcome)
    records.sort(key=lambda rec: rec.key)
    return GridResult(records=tuple(records), failures=tuple(failures))


_GROUP_FIELDS = ("dataset", "kernel", "bandwidth", "degree")


def _record_field(record: MaeRecord, name: str):
    if name == "dataset":
        return record.dataset
    if name == "kernel":
        return record.config.kernel.value
    if name == "bandwidth":
        return record.config.bandwidth
    if name == "degree":
        return record.config.degree
    raise ValueError(f"unknown grouping field {name!r}")


def aggregate_mae(records: Iterable[MaeRecord], group_by: Sequence[str]) -> dict[tuple, float]:
    """Mean MAE per group key, keys in sorted order.

    group_by must be a nonempty subset of (dataset, kernel, bandwidth, degree).
    """
    group_by = tuple(group_by)
    if not group_by:
        raise ValueError("group_by must name at least one field")
    for name in group_by:
        if name not in _GROUP_FIELDS:
            raise ValueError(f"unknown grouping field {name!r}")
    groups: dict[tuple, list[float]] = {}
    for rec in records:
        key = tuple(_record_field(rec, name) for name in group_by)
        groups.setdefault(key, []).append(rec.mae)
    if not groups:
        raise ValueError("no records to aggregate")
    return {key: float(np.mean(groups[key])) for key in sorted(groups)}


@lru_cache(maxsize=64)
def _t_975(df: int) -> float:
    return float(student_t.ppf(0.975, df))


def mean_ci95(values) -> tuple[float, float, float]:
    """Student-t 95% confidence interval for the mean: m +- t(0.975, n-1) s/sqrt(n)."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ValueError("mean_ci95 needs at least 2 values")
    if not np.all(np.isfinite(v)):
        raise ValueError("mean_ci95 inputs must be finite")
    m = float(np.mean(v))
    s = float(np.std(v, ddof=1))
    half = _t_975(v.size - 1) * s / math.sqrt(v.size)
    return (m, m - half, m + half)


def grid_csv_lines(records: Iterable[MaeRecord]) -> list[str]:
    """Canonical CSV lines: header plus rows sorted by the record key."""
    lines = [GRID_CSV_HEADER]
    for rec in sorted(records, key=lambda r: r.key):
        lines.append(
            f"{rec.dataset},{rec.config.kernel.value},{rec.config.bandwidth!r},"
            f"{rec.config.degree},{rec.repeat},{rec.fold},{rec.mae!r}"
        )
    return lines


def write_grid_csv(records: Iterable[MaeRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(grid_csv_lines(records)) + "\n")


def read_grid_csv(path) -> list[MaeRecord]:
    """Parse a grid CSV back into records (the export's self-read check)."""
    from .kernels import parse_kernel

    with open(path, "r", encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle if line.strip()]
    if not lines or lines[0] != GRID_CSV_HEADER:
        raise ValueError(f"bad grid CSV header in {path}")
    records = []
    for line in lines[1:]:
        dataset, kernel, bandwidth, degree, repeat, fold, value = line.split(",")
        records.append(
            MaeRecord(
                dataset=dataset,
                config=VariantConfig(parse_kernel(kernel), float(bandwidth), int(degree)),
                repeat=int(repeat),
                fold=int(fold),
                mae=float(value),
            )
        )
    return records
