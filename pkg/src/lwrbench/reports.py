"""Artifact writers for the run command.

Every file is plain CSV or INI text with repr() float formatting, so a fixed
(config, seed) pair always produces byte-identical output.
"""

from __future__ import annotations

import platform
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import scipy

from . import __version__
from .config import HarnessConfig, config_to_ini
from .data import CleanDataset
from .evaluation import (
    GridResult,
    MaeRecord,
    aggregate_mae,
    mean_ci95,
    read_grid_csv,
    write_grid_csv,
)
from .stats import RankingResult, grouping_csv_rows, rank_variants

__all__ = ["RunArtifacts", "write_run_artifacts", "evaluate_findings"]

MANIFEST_NAME = "run_manifest.cfg"


@dataclass(frozen=True)
class RunArtifacts:
    out_dir: Path
    files: tuple[str, ...]
    variant_count: int
    record_count: int
    failure_count: int
    findings: tuple[tuple[str, str, str], ...]  # (check, status, detail)
    overall_groups: tuple[str, ...] = ()  # textual rendering, best group first


def _write(path: Path, lines: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def _fmt(value: float) -> str:
    return repr(float(value))


def _kernel_table(
    records: Sequence[MaeRecord],
    config: HarnessConfig,
    inner_field: str | None,
    inner_values: Sequence,
    inner_tag: str,
) -> list[str]:
    """Wide table: one kernel row, one column per dataset (x inner value)."""
    dataset_names = [spec.name for spec in config.datasets]

    def cell(means, key):
        value = means.get(key)
        return "NA" if value is None else _fmt(value)  # NA marks a failed variant

    if inner_field is None:
        means = aggregate_mae(records, ("dataset", "kernel"))
        header = ["kernel"] + dataset_names
        lines = [",".join(header)]
        for kernel in config.kernels:
            cells = [cell(means, (ds, kernel.value)) for ds in dataset_names]
            lines.append(",".join([kernel.value] + cells))
        return lines
    means = aggregate_mae(records, ("dataset", "kernel", inner_field))
    header = ["kernel"] + [
        f"{ds}/{inner_tag}={val!r}" if isinstance(val, float) else f"{ds}/{inner_tag}={val}"
        for ds in dataset_names
        for val in inner_values
    ]
    lines = [",".join(header)]
    for kernel in config.kernels:
        cells = [
            cell(means, (ds, kernel.value, val))
            for ds in dataset_names
            for val in inner_values
        ]
        lines.append(",".join([kernel.value] + cells))
    return lines


def _intervals_lines(records: Sequence[MaeRecord]) -> list[str]:
    by_variant: dict[tuple, list[float]] = {}
    for rec in records:
        by_variant.setdefault((rec.dataset, *rec.config.key), []).append(rec.mae)
    lines = ["dataset,kernel,bandwidth,degree,mean,ci_low,ci_high"]
    for key in sorted(by_variant):
        mean, lo, hi = mean_ci95(by_variant[key])
        dataset, kernel, bandwidth, degree = key
        lines.append(
            f"{dataset},{kernel},{bandwidth!r},{degree},{_fmt(mean)},{_fmt(lo)},{_fmt(hi)}"
        )
    return lines


def _grouping_lines(ranking: RankingResult, scope_tag: str | None) -> list[str]:
    lines = ["scope,treatment,group_index,group_mean,treatment_mean"]
    for slice_value, grouping in ranking.groupings.items():
        scope = "overall" if slice_value is None else f"{scope_tag}={slice_value}"
        lines.extend(grouping_csv_rows(scope, grouping))
    return lines


def evaluate_findings(
    records: Sequence[MaeRecord], config: HarnessConfig, overall_ranking: RankingResult | None
) -> list[tuple[str, str, str]]:
    """The three qualitative rank-level checks, as (check, status, detail) rows."""
    kernel_names = {k.value for k in config.kernels}
    findings = []

    check = "uniform_kernel_never_best"
    if "rectangular" not in kernel_names or len(kernel_names) < 2:
        findings.append((check, "skipped", "needs rectangular plus another kernel"))
    else:
        means = aggregate_mae(records, ("dataset", "kernel"))
        best = {}
        for (dataset, kernel), value in means.items():
            if dataset not in best or value < best[dataset][1]:
                best[dataset] = (kernel, value)
        offenders = [ds for ds, (kernel, _) in sorted(best.items()) if kernel == "rectangular"]
        if offenders:
            findings.append((check, "fail", "rectangular ranked best on: " + " ".join(offenders)))
        else:
            detail = " ".join(f"{ds}:{best[ds][0]}" for ds in sorted(best))
            findings.append((check, "pass", detail))

    heavy = {"gaussian", "logistic", "sigmoid"}
    check = "infinite_support_kernels_worst_group"
    if overall_ranking is None or not heavy <= kernel_names:
        findings.append((check, "skipped", "needs gaussian+logistic+sigmoid in the kernel axis"))
    else:
        grouping = overall_ranking.groupings[None]
        worst = set(grouping.groups[-1].treatments)
        if heavy <= worst:
            findings.append((check, "pass", "worst group: " + " ".join(sorted(worst))))
        else:
            findings.append(
                (check, "fail", "worst group: " + " ".join(sorted(worst)))
            )

    check = "triweight_or_biweight_in_best_group"
    if overall_ranking is None or not ({"triweight", "biweight"} & kernel_names):
        findings.append((check, "skipped", "needs triweight or biweight in the kernel axis"))
    else:
        grouping = overall_ranking.groupings[None]
        best_group = set(grouping.groups[0].treatments)
        if best_group & {"triweight", "biweight"}:
            findings.append((check, "pass", "best group: " + " ".join(sorted(best_group))))
        else:
            findings.append((check, "fail", "best group: " + " ".join(sorted(best_group))))
    return findings


def _manifest_lines(
    config: HarnessConfig, result: GridResult, datasets: Sequence[CleanDataset]
) -> list[str]:
    lines = config_to_ini(config).rstrip("\n").split("\n")
    lines.append("")
    lines.append("[meta]")
    lines.append(f"tool = lwrbench {__version__}")
    lines.append(f"python = {platform.python_version()}")
    lines.append(f"numpy = {np.__version__}")
    lines.append(f"scipy = {scipy.__version__}")
    lines.append(f"records = {len(result.records)}")
    lines.append(f"failures = {len(result.failures)}")
    lines.append(
        "dataset_sizes = "
        + ", ".join(f"{ds.name}:{ds.n}x{ds.p}" for ds in datasets)
    )
    lines.append("")
    lines.append("[variants]")
    failed = {(f.dataset, *f.config.key) for f in result.failures}
    index = 0
    for spec in config.datasets:
        for kernel in config.kernels:
            for bandwidth in config.bandwidths:
                for degree in config.degrees:
                    index += 1
                    key = (spec.name, kernel.value, bandwidth, degree)
                    status = "failed" if key in failed else "ok"
                    lines.append(
                        f"variant_{index:04d} = "
                        f"{spec.name},{kernel.value},{bandwidth!r},{degree},{status}"
                    )
    if result.failures:
        lines.append("")
        lines.append("[failures]")
        for i, failure in enumerate(result.failures, start=1):
            message = failure.message.replace("\n", " ")
            lines.append(f"failure_{i:04d} = {message}")
    return lines


def write_run_artifacts(
    out_dir: Path,
    config: HarnessConfig,
    result: GridResult,
    datasets: Sequence[CleanDataset],
) -> RunArtifacts:
    """Write every artifact for a finished grid run and self-check the grid CSV.

    Always written: grid_results.csv, table4.csv, intervals.csv and the
    manifest.  tableA1.csv needs >= 2 degrees, tableA2.csv >= 2 bandwidths,
    and the Scott-Knott exports plus findings.csv need >= 2 kernels.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = result.records
    files: list[str] = []

    variant_count = (
        len(config.datasets)
        * len(config.kernels)
        * len(config.bandwidths)
        * len(config.degrees)
    )
    if not records:
        # total failure: leave the manifest (with its failure list) as the
        # only artifact so the run can be diagnosed
        _write(out_dir / MANIFEST_NAME, _manifest_lines(config, result, datasets))
        return RunArtifacts(
            out_dir=out_dir,
            files=(MANIFEST_NAME,),
            variant_count=variant_count,
            record_count=0,
            failure_count=len(result.failures),
            findings=(),
        )

    write_grid_csv(records, out_dir / "grid_results.csv")
    files.append("grid_results.csv")
    reread = read_grid_csv(out_dir / "grid_results.csv")
    if len(reread) != len(records):
        raise RuntimeError("grid_results.csv failed its self-read check")

    _write(out_dir / "table4.csv", _kernel_table(records, config, None, (), ""))
    files.append("table4.csv")
    if len(config.degrees) >= 2:
        _write(
            out_dir / "tableA1.csv",
            _kernel_table(records, config, "degree", config.degrees, "d"),
        )
        files.append("tableA1.csv")
    if len(config.bandwidths) >= 2:
        _write(
            out_dir / "tableA2.csv",
            _kernel_table(records, config, "bandwidth", config.bandwidths, "b"),
        )
        files.append("tableA2.csv")

    _write(out_dir / "intervals.csv", _intervals_lines(records))
    files.append("intervals.csv")

    # ranking needs at least two kernels that actually produced records;
    # failures can also strip a slice below two treatments, in which case
    # that export is skipped rather than aborting the whole report
    def try_ranking(slice_by):
        try:
            return rank_variants(records, "kernel", slice_by, config.alpha)
        except ValueError:
            return None

    surviving_kernels = {rec.config.kernel.value for rec in records}
    overall_ranking = None
    if len(config.kernels) >= 2 and len(surviving_kernels) >= 2:
        overall_ranking = try_ranking(None)
        for ranking, scope_tag, name in (
            (overall_ranking, None, "scott_knott_overall.csv"),
            (try_ranking("degree"), "degree", "scott_knott_by_degree.csv"),
            (try_ranking("bandwidth"), "bandwidth", "scott_knott_by_bandwidth.csv"),
        ):
            if ranking is not None:
                _write(out_dir / name, _grouping_lines(ranking, scope_tag))
                files.append(name)

    findings = ()
    if len(config.kernels) >= 2:
        findings = tuple(evaluate_findings(records, config, overall_ranking))
        # detail is free text; keep the file strictly 3 columns wide
        lines = ["check,status,detail"] + [
            f"{check},{status},{detail.replace(',', ';')}"
            for check, status, detail in findings
        ]
        _write(out_dir / "findings.csv", lines)
        files.append("findings.csv")

    _write(out_dir / MANIFEST_NAME, _manifest_lines(config, result, datasets))
    files.append(MANIFEST_NAME)

    overall_groups = ()
    if overall_ranking is not None:
        overall_groups = tuple(
            f"group {i}: " + " ".join(group.treatments)
            for i, group in enumerate(overall_ranking.groupings[None].groups, start=1)
        )
    return RunArtifacts(
        out_dir=out_dir,
        files=tuple(files),
        variant_count=variant_count,
        record_count=len(records),
        failure_count=len(result.failures),
        findings=findings,
        overall_groups=overall_groups,
    )
