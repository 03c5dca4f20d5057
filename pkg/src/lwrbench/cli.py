"""Command-line harness: list-kernels, validate, run, predict.

Exit codes: 0 success, 1 partial variant failures during a run, 2
configuration or I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, HarnessConfig, load_config, with_overrides
from .data import (
    DataError,
    REFERENCE_DATASET_STATS,
    dataset_stats,
    dimensionality_class,
    preprocess,
)
from .evaluation import run_grid
from .kernels import KernelKind, kernel_formula, parse_kernel
from .lwr import TrainingSet, VariantConfig, predict
from .reports import write_run_artifacts

__all__ = ["main"]


def _cmd_list_kernels(_args) -> int:
    for kind in KernelKind:
        tag = "uniform" if kind.uniform else "non-uniform"
        print(f"{kind.value:<13} {tag:<12} {kernel_formula(kind)}")
    return 0


def _close(actual: float, expected: float, rel: float) -> bool:
    return abs(actual - expected) <= rel * max(1.0, abs(expected))


def _cmd_validate(args) -> int:
    config = load_config(args.config)
    for spec in config.datasets:
        result = preprocess(spec)
        clean = result.clean
        stats = dataset_stats(clean)
        print(f"dataset {spec.name}")
        print(f"  rows: {stats.n} (dropped {result.rows_dropped} with missing values)")
        print(f"  features after preprocessing: {stats.p}")
        if result.constant_columns:
            print(f"  constant columns dropped: {', '.join(result.constant_columns)}")
        print(f"  dimensionality class: {dimensionality_class(clean)}")
        reference = REFERENCE_DATASET_STATS.get(spec.name.lower())
        rows = [
            ("min", stats.minimum, None if reference is None else reference.minimum),
            ("max", stats.maximum, None if reference is None else reference.maximum),
            ("mean", stats.mean, None if reference is None else reference.mean),
            ("median", stats.median, None if reference is None else reference.median),
            ("skew", stats.skew, None if reference is None else reference.skew),
        ]
        if reference is None:
            for label, actual, _ in rows:
                print(f"  effort {label}: {actual:g}")
        else:
            n_ok = "OK" if stats.n == reference.instances else "MISMATCH"
            print(f"  expected rows: {reference.instances} [{n_ok}]")
            # the published feature count is informational: one-hot encoding
            # and constant-column drops legitimately change p
            print(f"  published raw feature count: {reference.features}")
            for label, actual, expected in rows:
                if label in ("min", "max"):
                    ok = actual == expected
                elif label == "skew":
                    ok = abs(actual - expected) <= 0.15
                else:
                    ok = _close(actual, expected, 0.005)
                flag = "OK" if ok else "MISMATCH"
                print(f"  effort {label}: {actual:g} (expected {expected:g}) [{flag}]")
    return 0


def _cmd_run(args) -> int:
    config = load_config(args.config)
    config = with_overrides(
        config,
        seed=args.seed,
        out_dir=None if args.out is None else Path(args.out),
        workers=args.workers,
        strict_scaling=True if args.strict_scaling else None,
    )
    datasets = [preprocess(spec).clean for spec in config.datasets]
    result = run_grid(
        datasets,
        config.kernels,
        config.bandwidths,
        config.degrees,
        config.seed,
        folds=config.folds,
        repeats=config.repeats,
        workers=config.workers,
        strict_scaling=config.strict_scaling,
    )
    artifacts = write_run_artifacts(config.out_dir, config, result, datasets)
    print(f"variants: {artifacts.variant_count}")
    print(f"records: {artifacts.record_count}")
    print(f"failures: {artifacts.failure_count}")
    for line in artifacts.overall_groups:
        print(f"kernel ranking {line}")
    for check, check_status, detail in artifacts.findings:
        print(f"finding {check}: {check_status} ({detail})")
    for name in artifacts.files:
        print(f"wrote {artifacts.out_dir / name}")
    if artifacts.record_count == 0:
        print("error: every variant failed; see the manifest", file=sys.stderr)
        return 2
    return 1 if artifacts.failure_count else 0


def _parse_query(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise DataError(f"malformed query field {part!r}; expected name=value")
        key, value = part.split("=", 1)
        key = key.strip()
        if not key:
            raise DataError(f"malformed query field {part!r}; empty name")
        if key in values:
            raise DataError(f"duplicate query field {key!r}")
        values[key] = value
    return values


def _cmd_predict(args) -> int:
    config = load_config(args.config)
    spec = next((s for s in config.datasets if s.name == args.dataset), None)
    if spec is None:
        raise ConfigError(
            f"dataset {args.dataset!r} not in config; "
            f"available: {', '.join(s.name for s in config.datasets)}"
        )
    variant = VariantConfig(
        kernel=parse_kernel(args.kernel), bandwidth=args.bandwidth, degree=args.degree
    )
    result = preprocess(spec)
    row = result.pipeline.transform_row(_parse_query(args.query))
    train = TrainingSet(features=result.clean.features, efforts=result.clean.efforts)
    value = predict(train, variant, row)
    print(f"predicted effort: {value!r}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lwrbench",
        description="Locally weighted regression benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("list-kernels", help="list the ten kernels with their formulas")

    p_validate = sub.add_parser("validate", help="load datasets and report statistics")
    p_validate.add_argument("--config", required=True, help="config file path")

    p_run = sub.add_parser("run", help="run the cross-validated variant grid")
    p_run.add_argument("--config", required=True, help="config file path")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--workers", type=int, default=None, help="parallel workers")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument(
        "--strict-scaling",
        action="store_true",
        help="refit min-max scaling on each training fold",
    )

    p_predict = sub.add_parser("predict", help="predict effort for one raw query row")
    p_predict.add_argument("--config", required=True, help="config file path")
    p_predict.add_argument("--dataset", required=True, help="dataset name from the config")
    p_predict.add_argument("--kernel", required=True, help="kernel identifier")
    p_predict.add_argument("--bandwidth", type=float, required=True)
    p_predict.add_argument("--degree", type=int, required=True)
    p_predict.add_argument(
        "--query",
        required=True,
        help="comma-separated name=value pairs over the raw feature columns",
    )
    return parser


_HANDLERS = {
    "list-kernels": _cmd_list_kernels,
    "validate": _cmd_validate,
    "run": _cmd_run,
    "predict": _cmd_predict,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ConfigError, DataError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
