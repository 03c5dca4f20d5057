"""Regenerate the synthetic fixture CSVs under fixtures/.

Each fixture mirrors the raw row/column shape of one public PROMISE dataset
(the Desharnais-shaped file keeps its 81 raw rows, 4 of them with missing
cells, plus a removable duration column).  Values are synthetic: features are
drawn uniformly and efforts follow a positive, right-skewed function of them,
so local regression has real signal to find.  Deterministic for a fixed seed.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

REPO_ROOT = Path(__file__).resolve().parent.parent
FIXTURE_DIR = REPO_ROOT / "fixtures"

# name -> (raw rows, numeric feature columns, categorical spec, missing rows,
#          include duration column)
SHAPES = {
    "albrecht": dict(rows=24, numeric=7, categories=None, missing=0, duration=False),
    "kemerer": dict(rows=15, numeric=5, categories=("lang", "hw"), missing=0, duration=False),
    "nasa": dict(rows=18, numeric=3, categories=None, missing=0, duration=False),
    "desharnais": dict(rows=81, numeric=10, categories=("lang",), missing=4, duration=True),
    "china": dict(rows=499, numeric=18, categories=None, missing=0, duration=False),
    "maxwell": dict(rows=62, numeric=27, categories=None, missing=0, duration=False),
    "telecom": dict(rows=18, numeric=3, categories=None, missing=0, duration=False),
}

CATEGORY_LEVELS = {"lang": ("cobol", "pl1", "other"), "hw": ("mini", "mainframe")}


def _format(value: float) -> str:
    return f"{value:.6g}"


def build_fixture(name: str, shape: dict, seed: int) -> list[str]:
    rng = np.random.default_rng(seed)
    rows = shape["rows"]
    numeric = shape["numeric"]
    categories = shape["categories"] or ()

    features = rng.uniform(0.0, 100.0, size=(rows, numeric))
    cat_values = {
        col: rng.choice(CATEGORY_LEVELS[col], size=rows) for col in categories
    }
    # Effort: positive and right-skewed, driven mostly by the first features.
    signal = 0.6 * features[:, 0] + 0.3 * features[:, min(1, numeric - 1)]
    effort = 50.0 + 8.0 * signal * np.exp(rng.normal(0.0, 0.35, size=rows))
    duration = 1.0 + effort / 400.0 + rng.normal(0.0, 0.5, size=rows)

    header = [f"f{i + 1}" for i in range(numeric)] + list(categories)
    if shape["duration"]:
        header.append("duration")
    header.append("effort")

    lines = [",".join(header)]
    missing_rows = set()
    if shape["missing"]:
        missing_rows = set(
            rng.choice(rows, size=shape["missing"], replace=False).tolist()
        )
    for r in range(rows):
        cells = [_format(features[r, j]) for j in range(numeric)]
        if r in missing_rows:
            cells[rng.integers(0, numeric)] = "?"
        cells.extend(str(cat_values[col][r]) for col in categories)
        if shape["duration"]:
            cells.append(_format(max(duration[r], 0.5)))
        cells.append(_format(effort[r]))
        lines.append(",".join(cells))
    return lines


def main() -> int:
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    for i, (name, shape) in enumerate(sorted(SHAPES.items())):
        lines = build_fixture(name, shape, seed=9000 + i)
        path = FIXTURE_DIR / f"{name}.csv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {path} ({shape['rows']} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
