"""Harness configuration: a single INI-style key-value file.

Layout:

    [run]
    seed = 1
    folds = 10
    repeats = 10
    alpha = 0.05
    kernels = rectangular, epanechnikov, ...   ; defaults to all ten
    bandwidths = 0.2, 0.3, 0.4, 0.5
    degrees = 1, 2, 3
    strict_scaling = false
    out = results
    workers = 1

    [dataset:<name>]
    path = relative/or/absolute.csv            ; relative to the config file
    effort_column = effort
    excluded_columns = duration                 ; optional, comma separated
    categorical_columns = language              ; optional
    missing_markers = ?, NA                     ; optional; empty cells always count

Every [run] key is optional; the defaults above are the benchmark's standard
axes.  The run manifest written by the run command is itself a valid config
file (extra [meta]/[variants]/[failures] sections are ignored on re-parse).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from io import StringIO
from pathlib import Path

from .data import DEFAULT_MISSING_MARKERS, DatasetSpec
from .kernels import KernelKind, parse_kernel

__all__ = ["ConfigError", "HarnessConfig", "load_config", "parse_config_text", "config_to_ini"]

DEFAULT_BANDWIDTHS = (0.2, 0.3, 0.4, 0.5)
DEFAULT_DEGREES = (1, 2, 3)

_RUN_KEYS = {
    "seed",
    "folds",
    "repeats",
    "alpha",
    "kernels",
    "bandwidths",
    "degrees",
    "strict_scaling",
    "out",
    "workers",
}
_DATASET_KEYS = {
    "path",
    "effort_column",
    "excluded_columns",
    "categorical_columns",
    "missing_markers",
}
_IGNORED_SECTIONS = ("meta", "variants", "failures")


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class HarnessConfig:
    """Everything a run needs.  out_dir and workers are invocation details:
    they never influence results and are excluded from equality and from the
    manifest echo."""

    datasets: tuple[DatasetSpec, ...]
    kernels: tuple[KernelKind, ...] = tuple(KernelKind)
    bandwidths: tuple[float, ...] = DEFAULT_BANDWIDTHS
    degrees: tuple[int, ...] = DEFAULT_DEGREES
    folds: int = 10
    repeats: int = 10
    seed: int = 1
    alpha: float = 0.05
    strict_scaling: bool = False
    out_dir: Path = field(default=Path("results"), compare=False)
    workers: int = field(default=1, compare=False)

    def __post_init__(self):
        if not self.datasets:
            raise ConfigError("at least one dataset is required")
        names = [spec.name for spec in self.datasets]
        if len(set(names)) != len(names):
            raise ConfigError("dataset names must be unique")
        for axis_name, axis in (
            ("kernels", self.kernels),
            ("bandwidths", self.bandwidths),
            ("degrees", self.degrees),
        ):
            if not axis:
                raise ConfigError(f"{axis_name} must be nonempty")
            if len(set(axis)) != len(axis):
                raise ConfigError(f"{axis_name} must not contain duplicates")
        for b in self.bandwidths:
            if not (0.0 < b <= 1.0):
                raise ConfigError(f"bandwidth {b!r} must lie in (0, 1]")
        for d in self.degrees:
            if d not in (1, 2, 3):
                raise ConfigError(f"degree {d!r} must be 1, 2 or 3")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise ConfigError("seed must fit in 64 bits")
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError("alpha must lie in (0, 1)")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        object.__setattr__(self, "out_dir", Path(self.out_dir))


def _split_list(text: str) -> list[str]:
    return [token.strip() for token in text.split(",") if token.strip()]


def _parse(parser: configparser.ConfigParser, base_dir: Path) -> HarnessConfig:
    kwargs: dict = {}
    if parser.has_section("run"):
        run = parser["run"]
        unknown = set(run) - _RUN_KEYS
        if unknown:
            raise ConfigError(f"unknown [run] keys: {', '.join(sorted(unknown))}")
        try:
            if "seed" in run:
                kwargs["seed"] = int(run["seed"])
            if "folds" in run:
                kwargs["folds"] = int(run["folds"])
            if "repeats" in run:
                kwargs["repeats"] = int(run["repeats"])
            if "alpha" in run:
                kwargs["alpha"] = float(run["alpha"])
            if "workers" in run:
                kwargs["workers"] = int(run["workers"])
            if "bandwidths" in run:
                kwargs["bandwidths"] = tuple(float(v) for v in _split_list(run["bandwidths"]))
            if "degrees" in run:
                kwargs["degrees"] = tuple(int(v) for v in _split_list(run["degrees"]))
        except ValueError as err:
            raise ConfigError(f"bad [run] value: {err}") from None
        if "kernels" in run:
            try:
                kwargs["kernels"] = tuple(parse_kernel(v) for v in _split_list(run["kernels"]))
            except ValueError as err:
                raise ConfigError(str(err)) from None
        if "strict_scaling" in run:
            token = run["strict_scaling"].strip().lower()
            if token not in ("true", "false"):
                raise ConfigError("strict_scaling must be true or false")
            kwargs["strict_scaling"] = token == "true"
        if "out" in run:
            out = Path(run["out"])
            kwargs["out_dir"] = out if out.is_absolute() else (base_dir / out).resolve()

    datasets = []
    for section in parser.sections():
        if section == "run" or section in _IGNORED_SECTIONS:
            continue
        if not section.startswith("dataset:"):
            raise ConfigError(f"unknown section [{section}]")
        name = section.split(":", 1)[1].strip()
        body = parser[section]
        unknown = set(body) - _DATASET_KEYS
        if unknown:
            raise ConfigError(f"unknown keys in [{section}]: {', '.join(sorted(unknown))}")
        if "path" not in body:
            raise ConfigError(f"[{section}] needs a path")
        if "effort_column" not in body:
            raise ConfigError(f"[{section}] needs an effort_column")
        path = Path(body["path"])
        if not path.is_absolute():
            path = (base_dir / path).resolve()
        markers = (
            tuple(_split_list(body["missing_markers"]))
            if "missing_markers" in body
            else DEFAULT_MISSING_MARKERS
        )
        datasets.append(
            DatasetSpec(
                name=name,
                csv_path=path,
                effort_column=body["effort_column"].strip(),
                excluded_columns=tuple(_split_list(body.get("excluded_columns", ""))),
                categorical_columns=tuple(_split_list(body.get("categorical_columns", ""))),
                missing_markers=markers,
            )
        )
    try:
        return HarnessConfig(datasets=tuple(datasets), **kwargs)
    except ConfigError:
        raise
    except Exception as err:  # DataError from DatasetSpec, etc.
        raise ConfigError(str(err)) from None


def parse_config_text(text: str, base_dir: Path) -> HarnessConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as err:
        raise ConfigError(f"malformed config: {err}") from None
    return _parse(parser, base_dir)


def load_config(path) -> HarnessConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"), path.parent.resolve())


def config_to_ini(config: HarnessConfig) -> str:
    """Canonical experiment-identity serialization (omits out/workers)."""
    out = StringIO()
    out.write("[run]\n")
    out.write(f"seed = {config.seed}\n")
    out.write(f"folds = {config.folds}\n")
    out.write(f"repeats = {config.repeats}\n")
    out.write(f"alpha = {config.alpha!r}\n")
    out.write(f"kernels = {', '.join(k.value for k in config.kernels)}\n")
    out.write(f"bandwidths = {', '.join(repr(b) for b in config.bandwidths)}\n")
    out.write(f"degrees = {', '.join(str(d) for d in config.degrees)}\n")
    out.write(f"strict_scaling = {'true' if config.strict_scaling else 'false'}\n")
    for spec in config.datasets:
        out.write(f"\n[dataset:{spec.name}]\n")
        out.write(f"path = {spec.csv_path}\n")
        out.write(f"effort_column = {spec.effort_column}\n")
        if spec.excluded_columns:
            out.write(f"excluded_columns = {', '.join(spec.excluded_columns)}\n")
        if spec.categorical_columns:
            out.write(f"categorical_columns = {', '.join(spec.categorical_columns)}\n")
        if spec.missing_markers != DEFAULT_MISSING_MARKERS:
            out.write(f"missing_markers = {', '.join(spec.missing_markers)}\n")
    return out.getvalue()


def with_overrides(config: HarnessConfig, **overrides) -> HarnessConfig:
    """CLI flag overrides (seed, out_dir, workers, strict_scaling)."""
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(config, **overrides) if overrides else config
