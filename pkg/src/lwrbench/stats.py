"""Statistical comparison machinery: one-way ANOVA, Box-Cox scaling and
Scott-Knott significance clustering of treatment MAE distributions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import betainc

from .evaluation import MaeRecord, _record_field

__all__ = [
    "AnovaResult",
    "ScottKnottGroup",
    "ScottKnottGrouping",
    "RankingResult",
    "one_way_anova",
    "f_cdf",
    "box_cox",
    "box_cox_mle",
    "scott_knott",
    "rank_variants",
    "grouping_csv_rows",
]


@dataclass(frozen=True)
class AnovaResult:
    f_statistic: float
    df_between: int
    df_within: int
    p_value: float


def f_cdf(x: float, df1: int, df2: int) -> float:
    """F-distribution CDF via the regularized incomplete beta function."""
    if df1 < 1 or df2 < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if x <= 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    z = df1 * x / (df1 * x + df2)
    return float(betainc(df1 / 2.0, df2 / 2.0, z))


def _validated_groups(treatments: Mapping[str, Sequence[float]], min_values: int) -> dict[str, np.ndarray]:
    if len(treatments) < 2:
        raise ValueError("need at least 2 treatments")
    groups = {}
    for label, sample in treatments.items():
        arr = np.asarray(sample, dtype=float)
        if arr.size < min_values:
            raise ValueError(f"treatment {label!r} needs at least {min_values} values")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"treatment {label!r} contains non-finite values")
        groups[label] = arr
    return groups


def one_way_anova(treatments: Mapping[str, Sequence[float]]) -> AnovaResult:
    """F = MSB/MSW from the standard sum-of-squares decomposition.

    Zero within-group variance is made total: MSW = 0 with MSB > 0 reports
    F = +inf, p = 0; MSW = 0 with MSB = 0 reports F = 0, p = 1.
    """
    groups = _validated_groups(treatments, min_values=2)
    values = np.concatenate(list(groups.values()))
    grand = float(values.mean())
    ssb = 0.0
    ssw = 0.0
    for arr in groups.values():
        m = float(arr.mean())
        ssb += arr.size * (m - grand) ** 2
        ssw += float(np.sum((arr - m) ** 2))
    df_between = len(groups) - 1
    df_within = values.size - len(groups)
    msb = ssb / df_between
    msw = ssw / df_within
    if msw == 0.0:
        if msb > 0.0:
            return AnovaResult(math.inf, df_between, df_within, 0.0)
        return AnovaResult(0.0, df_between, df_within, 1.0)
    f_stat = msb / msw
    return AnovaResult(f_stat, df_between, df_within, 1.0 - f_cdf(f_stat, df_between, df_within))


def box_cox(values, lam: float) -> np.ndarray:
    """Power transform (x^lam - 1)/lam, or ln(x) at lam = 0; x must be > 0."""
    x = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x <= 0.0):
        raise ValueError("box_cox needs strictly positive finite values")
    if lam == 0.0:
        return np.log(x)
    return (x**lam - 1.0) / lam


def _box_cox_loglik(x: np.ndarray, log_sum: float, lam: float) -> float:
    y = box_cox(x, lam)
    var = float(np.var(y))
    if var <= 0.0:
        return -math.inf
    return -0.5 * x.size * math.log(var) + (lam - 1.0) * log_sum


def box_cox_mle(values, lo: float = -5.0, hi: float = 5.0, tol: float = 1e-4) -> float:
    """Maximum-likelihood lambda, located by golden-section search on [lo, hi]."""
    x = np.asarray(values, dtype=float)
    if x.size < 3:
        raise ValueError("box_cox_mle needs at least 3 values")
    if not np.all(np.isfinite(x)) or np.any(x <= 0.0):
        raise ValueError("box_cox_mle needs strictly positive finite values")
    if float(np.min(x)) == float(np.max(x)):
        raise ValueError("box_cox_mle is undefined for all-equal values")
    log_sum = float(np.sum(np.log(x)))
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = _box_cox_loglik(x, log_sum, c)
    fd = _box_cox_loglik(x, log_sum, d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = _box_cox_loglik(x, log_sum, c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = _box_cox_loglik(x, log_sum, d)
    return (a + b) / 2.0


@dataclass(frozen=True)
class ScottKnottGroup:
    treatments: tuple[str, ...]
    mean: float


@dataclass(frozen=True)
class ScottKnottGrouping:
    """Ordered, non-overlapping clusters of treatments, best (lowest mean) first."""

    groups: tuple[ScottKnottGroup, ...]
    treatment_means: Mapping[str, float]

    def group_index(self, treatment: str) -> int:
        """1-based index of the group containing the treatment."""
        for i, group in enumerate(self.groups, start=1):
            if treatment in group.treatments:
                return i
        raise KeyError(treatment)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for group in self.groups for label in group.treatments)


def _best_split(ordered: list[str], means: Mapping[str, float]) -> int:
    # Maximize the between-group sum of squares of treatment means over the
    # g-1 contiguous split points; first maximum wins.
    g = len(ordered)
    all_means = np.array([means[label] for label in ordered])
    grand = float(all_means.mean())
    best_i, best_bss = 1, -math.inf
    for i in range(1, g):
        left = all_means[:i]
        right = all_means[i:]
        bss = left.size * (float(left.mean()) - grand) ** 2
        bss += right.size * (float(right.mean()) - grand) ** 2
        if bss > best_bss:
            best_i, best_bss = i, bss
    return best_i


def scott_knott(treatments: Mapping[str, Sequence[float]], alpha: float = 0.05) -> ScottKnottGrouping:
    """Recursively split mean-sorted treatments into significantly distinct groups.

    At each level the best contiguous split of the mean-sorted treatments is
    tested by a one-way ANOVA on the two pooled super-groups; a significant
    test (p < alpha) recurses into both sides, otherwise the set is one group.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    groups = _validated_groups(treatments, min_values=1)
    means = {label: float(arr.mean()) for label, arr in groups.items()}
    ordered = sorted(groups, key=lambda label: (means[label], label))

    def recurse(labels: list[str]) -> list[list[str]]:
        if len(labels) == 1:
            return [labels]
        split = _best_split(labels, means)
        left, right = labels[:split], labels[split:]
        pooled = {
            "low": np.concatenate([groups[label] for label in left]),
            "high": np.concatenate([groups[label] for label in right]),
        }
        if one_way_anova(pooled).p_value < alpha:
            return recurse(left) + recurse(right)
        return [labels]

    clusters = recurse(ordered)
    built = []
    for labels in clusters:
        pooled = np.concatenate([groups[label] for label in labels])
        built.append(ScottKnottGroup(treatments=tuple(labels), mean=float(pooled.mean())))
    built.sort(key=lambda grp: grp.mean)
    return ScottKnottGrouping(groups=tuple(built), treatment_means=dict(means))


@dataclass(frozen=True)
class RankingResult:
    """Scott-Knott groupings per scope slice, plus per-treatment mean ranks.

    mean_rank averages each treatment's per-dataset group index (the rank
    proxy) across datasets; lambdas records the Box-Cox lambda fitted on each
    dataset's pooled MAE sample (None when the transform was skipped).
    """

    treatment: str
    slice_by: str | None
    groupings: Mapping[object, ScottKnottGrouping]
    mean_ranks: Mapping[object, Mapping[str, float]]
    lambdas: Mapping[str, float | None]


def _dataset_lambdas(records: Sequence[MaeRecord]) -> dict[str, float | None]:
    lambdas: dict[str, float | None] = {}
    by_dataset: dict[str, list[float]] = {}
    for rec in records:
        by_dataset.setdefault(rec.dataset, []).append(rec.mae)
    for name, values in by_dataset.items():
        arr = np.asarray(values, dtype=float)
        # Box-Cox needs strictly positive, non-constant data; exact-fit
        # synthetic runs can violate both, in which case the raw values are
        # used unchanged.
        if float(arr.min()) <= 0.0 or float(arr.min()) == float(arr.max()):
            lambdas[name] = None
        else:
            lambdas[name] = box_cox_mle(arr)
    return lambdas


def _transformed(records: Sequence[MaeRecord], lambdas: Mapping[str, float | None]) -> list[float]:
    by_dataset: dict[str, list[int]] = {}
    for i, rec in enumerate(records):
        by_dataset.setdefault(rec.dataset, []).append(i)
    values = [0.0] * len(records)
    for name, idxs in by_dataset.items():
        lam = lambdas[name]
        raw = [records[i].mae for i in idxs]
        scaled = raw if lam is None else box_cox(np.asarray(raw), lam).tolist()
        for i, value in zip(idxs, scaled):
            values[i] = float(value)
    return values


def _treatment_label(rec: MaeRecord, field: str) -> str:
    value = _record_field(rec, field)
    return value if isinstance(value, str) else repr(value)


def rank_variants(
    records: Iterable[MaeRecord],
    treatment: str = "kernel",
    slice_by: str | None = None,
    alpha: float = 0.05,
) -> RankingResult:
    """Rank treatments by Scott-Knott over Box-Cox-scaled MAE distributions.

    MAE samples are scaled per dataset (lambda fitted on the dataset's pooled
    sample), pooled across datasets, then clustered.  slice_by restricts the
    pooling to one value of another axis at a time (e.g. treatment="kernel",
    slice_by="degree" ranks kernels separately per degree).
    """
    recs = list(records)
    if not recs:
        raise ValueError("rank_variants needs at least one record")
    if slice_by == treatment:
        raise ValueError("slice_by must differ from treatment")
    lambdas = _dataset_lambdas(recs)
    transformed = _transformed(recs, lambdas)

    if slice_by is None:
        slices: dict[object, list[int]] = {None: list(range(len(recs)))}
    else:
        slices = {}
        for i, rec in enumerate(recs):
            slices.setdefault(_record_field(rec, slice_by), []).append(i)
        slices = {key: slices[key] for key in sorted(slices)}

    groupings: dict[object, ScottKnottGrouping] = {}
    mean_ranks: dict[object, dict[str, float]] = {}
    for slice_value, idxs in slices.items():
        samples: dict[str, list[float]] = {}
        per_dataset: dict[str, dict[str, list[float]]] = {}
        for i in idxs:
            label = _treatment_label(recs[i], treatment)
            samples.setdefault(label, []).append(transformed[i])
            per_dataset.setdefault(recs[i].dataset, {}).setdefault(label, []).append(
                transformed[i]
            )
        groupings[slice_value] = scott_knott(samples, alpha)
        rank_sums: dict[str, list[int]] = {label: [] for label in samples}
        for dataset_samples in per_dataset.values():
            if len(dataset_samples) < 2:
                continue
            grouping = scott_knott(dataset_samples, alpha)
            for label in dataset_samples:
                rank_sums[label].append(grouping.group_index(label))
        mean_ranks[slice_value] = {
            label: (float(np.mean(ranks)) if ranks else math.nan)
            for label, ranks in rank_sums.items()
        }
    return RankingResult(
        treatment=treatment,
        slice_by=slice_by,
        groupings=groupings,
        mean_ranks=mean_ranks,
        lambdas=lambdas,
    )


def grouping_csv_rows(scope: str, grouping: ScottKnottGrouping) -> list[str]:
    """Rows for the grouping export: scope,treatment,group_index,group_mean,treatment_mean."""
    rows = []
    for index, group in enumerate(grouping.groups, start=1):
        for label in group.treatments:
            rows.append(
                f"{scope},{label},{index},{group.mean!r},"
                f"{grouping.treatment_means[label]!r}"
            )
    return rows
