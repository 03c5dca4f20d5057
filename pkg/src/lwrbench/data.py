"""CSV loading and preprocessing for effort datasets.

Pipeline: load -> drop rows with missing values -> remove after-the-event
columns -> one-hot encode categorical columns -> min-max scale features to
[0, 1].  Efforts are left in raw units so errors stay interpretable.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "DataError",
    "DatasetSpec",
    "RawDataset",
    "CleanDataset",
    "EffortStats",
    "PreprocessResult",
    "FittedPipeline",
    "DEFAULT_MISSING_MARKERS",
    "REFERENCE_DATASET_STATS",
    "load_csv",
    "drop_missing_rows",
    "remove_columns",
    "one_hot_encode",
    "min_max_scale",
    "dataset_stats",
    "dimensionality_class",
    "preprocess",
]

#: Tokens treated as missing in addition to the empty cell.
DEFAULT_MISSING_MARKERS: tuple[str, ...] = ("?", "NA")

Cell = float | str | None  # None marks a missing value


class DataError(Exception):
    """A dataset schema or content problem, reported with its location."""


@dataclass(frozen=True)
class DatasetSpec:
    """Where a dataset lives and how to interpret its columns."""

    name: str
    csv_path: Path
    effort_column: str
    excluded_columns: tuple[str, ...] = ()
    categorical_columns: tuple[str, ...] = ()
    missing_markers: tuple[str, ...] = DEFAULT_MISSING_MARKERS

    def __post_init__(self):
        if not self.name:
            raise DataError("dataset name must be nonempty")
        if self.effort_column in self.excluded_columns:
            raise DataError(
                f"dataset {self.name!r}: effort column {self.effort_column!r} "
                "cannot be excluded"
            )
        object.__setattr__(self, "csv_path", Path(self.csv_path))
        object.__setattr__(self, "excluded_columns", tuple(self.excluded_columns))
        object.__setattr__(self, "categorical_columns", tuple(self.categorical_columns))
        object.__setattr__(self, "missing_markers", tuple(self.missing_markers))


@dataclass(frozen=True)
class RawDataset:
    """A typed rectangular table: cells are numeric, categorical or missing."""

    name: str
    columns: tuple[str, ...]
    rows: tuple[tuple[Cell, ...], ...]
    effort_column: str

    def column_index(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise DataError(f"dataset {self.name!r} has no column {name!r}") from None

    @property
    def n_rows(self) -> int:
        return len(self.rows)


@dataclass(frozen=True, eq=False)
class CleanDataset:
    """Preprocessed feature matrix in [0, 1] plus the raw effort vector."""

    name: str
    features: np.ndarray
    efforts: np.ndarray
    feature_names: tuple[str, ...]
    dim_class: str = field(default="")

    def __post_init__(self):
        features = np.array(self.features, dtype=float)
        efforts = np.array(self.efforts, dtype=float)
        if features.ndim != 2 or features.shape[0] != efforts.shape[0]:
            raise DataError("features and efforts shapes disagree")
        if features.shape[0] < 10:
            raise DataError(
                f"dataset {self.name!r} has {features.shape[0]} rows; "
                "at least 10 are needed for 10-fold cross-validation"
            )
        if features.shape[1] < 1:
            raise DataError(f"dataset {self.name!r} has no feature columns")
        if len(self.feature_names) != features.shape[1]:
            raise DataError("feature_names length must match feature count")
        if not np.all(np.isfinite(features)) or not np.all(np.isfinite(efforts)):
            raise DataError(f"dataset {self.name!r} contains non-finite values")
        if np.any(features < 0.0) or np.any(features > 1.0):
            raise DataError(f"dataset {self.name!r}: features must lie in [0, 1]")
        if np.any(efforts <= 0.0):
            raise DataError(f"dataset {self.name!r}: efforts must be positive")
        features.flags.writeable = False
        efforts.flags.writeable = False
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "efforts", efforts)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if not self.dim_class:
            object.__setattr__(
                self, "dim_class", _classify(self.name, features.shape[0])
            )

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]


def _type_cell(token: str, markers: Sequence[str]) -> Cell:
    token = token.strip()
    if token == "" or token in markers:
        return None
    try:
        value = float(token)
    except ValueError:
        return token
    # tokens like "nan" or "inf" parse as floats but are not usable numbers;
    # keep them categorical so errors name the offending cell
    return value if math.isfinite(value) else token


def load_csv(spec: DatasetSpec) -> RawDataset:
    """Read a UTF-8, comma-separated file with one header row.

    Cells become floats where parseable, missing where a marker matches, and
    categorical strings otherwise.  Ragged rows and a missing effort column
    are reported with their location.
    """
    path = spec.csv_path
    if not path.is_file():
        raise DataError(f"dataset {spec.name!r}: file not found: {path}")
    # utf-8-sig strips the BOM that spreadsheet exports like to prepend
    with open(path, "r", encoding="utf-8-sig", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"dataset {spec.name!r}: {path} is empty") from None
        columns = tuple(name.strip() for name in header)
        if len(set(columns)) != len(columns):
            raise DataError(f"dataset {spec.name!r}: duplicate column names in {path}")
        if spec.effort_column not in columns:
            raise DataError(
                f"dataset {spec.name!r}: effort column {spec.effort_column!r} "
                f"not found in {path}"
            )
        rows = []
        for line_no, cells in enumerate(reader, start=2):
            if len(cells) != len(columns):
                raise DataError(
                    f"dataset {spec.name!r}: row at line {line_no} has "
                    f"{len(cells)} cells, expected {len(columns)}"
                )
            rows.append(tuple(_type_cell(cell, spec.missing_markers) for cell in cells))
    if not rows:
        raise DataError(f"dataset {spec.name!r}: {path} has no data rows")
    return RawDataset(
        name=spec.name, columns=columns, rows=tuple(rows), effort_column=spec.effort_column
    )


def drop_missing_rows(raw: RawDataset) -> tuple[RawDataset, int]:
    """Remove every row containing a missing value; returns (survivors, dropped)."""
    kept = tuple(row for row in raw.rows if None not in row)
    dropped = raw.n_rows - len(kept)
    if not kept:
        raise DataError(f"dataset {raw.name!r}: every row contains missing values")
    if dropped == 0:
        return raw, 0
    return (
        RawDataset(
            name=raw.name, columns=raw.columns, rows=kept, effort_column=raw.effort_column
        ),
        dropped,
    )


def remove_columns(raw: RawDataset, names: Sequence[str]) -> RawDataset:
    """Drop after-the-event columns by name."""
    if not names:
        return raw
    for name in names:
        raw.column_index(name)  # raises with a useful message
        if name == raw.effort_column:
            raise DataError(f"dataset {raw.name!r}: cannot remove effort column")
    keep = [i for i, col in enumerate(raw.columns) if col not in set(names)]
    return RawDataset(
        name=raw.name,
        columns=tuple(raw.columns[i] for i in keep),
        rows=tuple(tuple(row[i] for i in keep) for row in raw.rows),
        effort_column=raw.effort_column,
    )


def _category_label(value: Cell) -> str:
    if isinstance(value, str):
        return value
    return repr(value)


def _categories_in_order(raw: RawDataset, col_idx: int, name: str) -> list[Cell]:
    seen: list[Cell] = []
    for row_no, row in enumerate(raw.rows, start=1):
        value = row[col_idx]
        if value is None:
            raise DataError(
                f"dataset {raw.name!r}: missing value in categorical column "
                f"{name!r} (data row {row_no}); drop missing rows first"
            )
        if value not in seen:
            seen.append(value)
    return seen


def one_hot_encode(raw: RawDataset, categorical: Sequence[str]) -> RawDataset:
    """Replace each categorical column by one binary column per category.

    Categories are taken in first-appearance order; derived columns are named
    "<column>=<category>".  A single-category column becomes one constant-1
    column (dropped later by scaling).
    """
    out, _ = _one_hot_encode(raw, categorical)
    return out


def _one_hot_encode(
    raw: RawDataset, categorical: Sequence[str]
) -> tuple[RawDataset, dict[str, list[Cell]]]:
    if not categorical:
        return raw, {}
    category_map: dict[str, list[Cell]] = {}
    for name in categorical:
        if name == raw.effort_column:
            raise DataError(f"dataset {raw.name!r}: cannot encode effort column")
        category_map[name] = _categories_in_order(raw, raw.column_index(name), name)

    new_columns: list[str] = []
    builders: list[tuple[int, list[Cell] | None]] = []  # (source index, categories)
    for i, col in enumerate(raw.columns):
        if col in category_map:
            for cat in category_map[col]:
                new_columns.append(f"{col}={_category_label(cat)}")
            builders.append((i, category_map[col]))
        else:
            new_columns.append(col)
            builders.append((i, None))
    new_rows = []
    for row in raw.rows:
        cells: list[Cell] = []
        for i, cats in builders:
            if cats is None:
                cells.append(row[i])
            else:
                cells.extend(1.0 if row[i] == cat else 0.0 for cat in cats)
        new_rows.append(tuple(cells))
    encoded = RawDataset(
        name=raw.name,
        columns=tuple(new_columns),
        rows=tuple(new_rows),
        effort_column=raw.effort_column,
    )
    return encoded, category_map


def min_max_scale(raw: RawDataset) -> CleanDataset:
    """Map each feature column to [0, 1]; the effort column passes through.

    Constant columns (max = min) are dropped with a warning.  All non-effort
    cells must be numeric by now (categoricals encoded, missing rows gone).
    """
    clean, _ = _min_max_scale(raw)
    return clean


def _min_max_scale(raw: RawDataset) -> tuple[CleanDataset, dict[str, tuple[float, float]]]:
    effort_idx = raw.column_index(raw.effort_column)
    feature_cols = [i for i in range(len(raw.columns)) if i != effort_idx]
    for row_no, row in enumerate(raw.rows, start=1):
        for i, cell in enumerate(row):
            if cell is None:
                raise DataError(
                    f"dataset {raw.name!r}: missing value in column "
                    f"{raw.columns[i]!r} (data row {row_no}); drop missing rows first"
                )
            if not isinstance(cell, float):
                raise DataError(
                    f"dataset {raw.name!r}: non-numeric value {cell!r} in column "
                    f"{raw.columns[i]!r} (data row {row_no}); declare the column "
                    "categorical or exclude it"
                )
    matrix = np.array(raw.rows, dtype=float)
    efforts = matrix[:, effort_idx]
    bounds: dict[str, tuple[float, float]] = {}
    kept_names: list[str] = []
    kept_cols: list[np.ndarray] = []
    for i in feature_cols:
        name = raw.columns[i]
        col = matrix[:, i]
        lo, hi = float(col.min()), float(col.max())
        bounds[name] = (lo, hi)
        if hi == lo:
            warnings.warn(
                f"dataset {raw.name!r}: dropping constant column {name!r}",
                stacklevel=2,
            )
            continue
        kept_names.append(name)
        kept_cols.append((col - lo) / (hi - lo))
    if not kept_cols:
        raise DataError(f"dataset {raw.name!r}: no usable feature columns remain")
    features = np.column_stack(kept_cols)
    clean = CleanDataset(
        name=raw.name,
        features=features,
        efforts=efforts,
        feature_names=tuple(kept_names),
    )
    return clean, bounds


@dataclass(frozen=True)
class EffortStats:
    n: int
    p: int
    minimum: float
    maximum: float
    mean: float
    median: float
    skew: float


def _skewness(values: np.ndarray) -> float:
    # Adjusted Fisher-Pearson coefficient; needs n >= 3 and nonzero variance.
    n = values.size
    if n < 3:
        return math.nan
    centered = values - values.mean()
    m2 = float(np.mean(centered**2))
    if m2 == 0.0:
        return 0.0
    m3 = float(np.mean(centered**3))
    g1 = m3 / m2**1.5
    return g1 * math.sqrt(n * (n - 1)) / (n - 2)


def dataset_stats(clean: CleanDataset) -> EffortStats:
    """Descriptive statistics of the effort vector."""
    e = clean.efforts
    return EffortStats(
        n=clean.n,
        p=clean.p,
        minimum=float(e.min()),
        maximum=float(e.max()),
        mean=float(e.mean()),
        median=float(np.median(e)),
        skew=_skewness(e),
    )


_NAME_CLASSES = {
    "albrecht": "Low",
    "kemerer": "Low",
    "nasa": "Low",
    "telecom": "Low",
    "desharnais": "Medium",
    "maxwell": "Medium",
    "china": "Large",
}


def _classify(name: str, n: int) -> str:
    by_name = _NAME_CLASSES.get(name.lower())
    if by_name is not None:
        return by_name
    if n < 30:
        return "Low"
    if n < 200:
        return "Medium"
    return "Large"


def dimensionality_class(clean: CleanDataset) -> str:
    """Low / Medium / Large, by name for the seven public datasets, else by n."""
    return _classify(clean.name, clean.n)


@dataclass(frozen=True)
class ReferenceStats:
    """Published PROMISE dataset statistics, used by the validate report."""

    features: int
    instances: int
    minimum: float
    maximum: float
    mean: float
    median: float
    skew: float


REFERENCE_DATASET_STATS: dict[str, ReferenceStats] = {
    "albrecht": ReferenceStats(7, 24, 1000.0, 105000.0, 22000.0, 12000.0, 2.2),
    "kemerer": ReferenceStats(7, 15, 23.2, 1107.3, 219.2, 130.3, 2.76),
    "nasa": ReferenceStats(3, 18, 5.0, 138.3, 49.47, 26.5, 0.57),
    "desharnais": ReferenceStats(12, 77, 546.0, 23940.0, 5046.0, 3647.0, 2.0),
    "china": ReferenceStats(18, 499, 26.0, 54620.0, 3921.0, 1829.0, 3.92),
    "maxwell": ReferenceStats(27, 62, 583.0, 63694.0, 8223.2, 5189.5, 3.26),
    "telecom": ReferenceStats(3, 18, 23.54, 1115.5, 284.33, 222.53, 1.78),
}


@dataclass(frozen=True)
class FittedPipeline:
    """The fitted encoder/scaler state, able to transform one raw query row."""

    spec: DatasetSpec
    source_columns: tuple[str, ...]  # raw feature columns in file order
    categories: Mapping[str, tuple[Cell, ...]]
    bounds: Mapping[str, tuple[float, float]]
    feature_names: tuple[str, ...]

    def transform_row(self, values: Mapping[str, str]) -> np.ndarray:
        """Scale/encode one raw feature row into the clean feature space.

        values maps raw column names to string tokens.  Unseen categories
        encode as an all-zero block with a warning; unknown or absent fields
        raise a DataError naming the field.
        """
        ignorable = {self.spec.effort_column, *self.spec.excluded_columns}
        for key in values:
            if key in ignorable:
                warnings.warn(f"ignoring field {key!r} (not used by the model)", stacklevel=2)
            elif key not in self.source_columns:
                raise DataError(f"unknown field {key!r}")
        out: list[float] = []
        for col in self.source_columns:
            if col not in values:
                raise DataError(f"missing field {col!r}")
            token = values[col].strip()
            if col in self.categories:
                cell = _type_cell(token, self.spec.missing_markers)
                cats = self.categories[col]
                block = [1.0 if cell == cat else 0.0 for cat in cats]
                if cell not in cats:
                    warnings.warn(
                        f"unseen category {token!r} for column {col!r}; "
                        "encoding as all zeros",
                        stacklevel=2,
                    )
                derived = [f"{col}={_category_label(cat)}" for cat in cats]
                out.extend(
                    v for v, name in zip(block, derived) if name in self.feature_names
                )
            else:
                try:
                    value = float(token)
                except ValueError:
                    raise DataError(
                        f"field {col!r} must be numeric, got {token!r}"
                    ) from None
                if col not in self.feature_names:
                    continue  # constant column dropped during fitting
                lo, hi = self.bounds[col]
                out.append((value - lo) / (hi - lo))
        return np.array(out, dtype=float)


@dataclass(frozen=True)
class PreprocessResult:
    clean: CleanDataset
    pipeline: FittedPipeline
    rows_dropped: int
    constant_columns: tuple[str, ...]


def preprocess(spec: DatasetSpec) -> PreprocessResult:
    """Run the full pipeline for one dataset spec."""
    raw = load_csv(spec)
    raw, dropped = drop_missing_rows(raw)
    raw = remove_columns(raw, spec.excluded_columns)
    categorical = [c for c in spec.categorical_columns if c not in spec.excluded_columns]
    source_columns = tuple(c for c in raw.columns if c != spec.effort_column)
    encoded, categories = _one_hot_encode(raw, categorical)
    clean, bounds = _min_max_scale(encoded)
    constant = tuple(
        c for c in encoded.columns
        if c != spec.effort_column and c not in clean.feature_names
    )
    pipeline = FittedPipeline(
        spec=spec,
        source_columns=source_columns,
        categories={k: tuple(v) for k, v in categories.items()},
        bounds=bounds,
        feature_names=clean.feature_names,
    )
    return PreprocessResult(
        clean=clean, pipeline=pipeline, rows_dropped=dropped, constant_columns=constant
    )
