"""Experiment configuration files (TOML).

Sections: ``[dataset]``, ``[space]``, ``[tuner]``, ``[metrics]``, ``[run]``,
and optionally ``[evaluator]`` for external trainers.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from ..datakit import DataError, Schema
from ..evaluators.base import MetricSpec
from ..searchspace import SearchSpace, SpaceError, parse_space
from ..tuners.records import AlphaPolicy, TunerError

OUTPUT_ENV = "FAIRHPO_OUTPUT_DIR"
TUNERS = ("rs", "tpe", "hyperband")
FAIRNESS_MODES = ("blind", "static", "auto")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    dataset: Mapping[str, Any]
    space: SearchSpace
    space_document: Mapping[str, Any]
    tuner: str
    fairness: str
    alpha: float
    R: float
    eta: int
    total_budget: float
    metric: MetricSpec
    seeds: tuple[int, ...]
    output_dir: Path
    evaluator: Mapping[str, Any] = field(default_factory=dict)
    n_workers: int = 1
    tpe: Mapping[str, Any] = field(default_factory=dict)
    record_wall_time: bool = False
    base_dir: Path = Path(".")

    @property
    def alpha_policy(self) -> AlphaPolicy:
        if self.fairness == "blind":
            return AlphaPolicy.static(1.0)
        if self.fairness == "auto":
            return AlphaPolicy.auto()
        return AlphaPolicy.static(self.alpha)

    @property
    def run_dir(self) -> Path:
        return self.output_dir / self.name

    def dataset_path(self) -> Path:
        p = Path(self.dataset["path"])
        return p if p.is_absolute() else self.base_dir / p


def _section(doc, name, required=True) -> Mapping:
    sec = doc.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"missing [{name}] section")
        return {}
    if not isinstance(sec, Mapping):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def parse_config(doc: Mapping, base_dir: Path | str = ".") -> ExperimentConfig:
    base_dir = Path(base_dir)
    dataset = dict(_section(doc, "dataset"))
    kind = dataset.setdefault("kind", "csv")
    if kind == "csv":
        if "path" not in dataset:
            raise ConfigError("dataset.path: missing")
        try:
            Schema.from_dict(dataset)
        except DataError as exc:
            raise ConfigError(f"dataset: {exc}") from None
        fr = dataset.setdefault("split", [0.6, 0.2, 0.2])
        if len(fr) != 3 or min(fr) <= 0 or abs(sum(fr) - 1) > 1e-9:
            raise ConfigError(f"dataset.split: need three positive fractions summing to 1, got {fr}")
        if dataset.setdefault("split_mode", "fixed") not in ("fixed", "per_seed"):
            raise ConfigError("dataset.split_mode: expected 'fixed' or 'per_seed'")
    elif kind != "synthetic":
        raise ConfigError(f"dataset.kind: unknown kind {kind!r}")

    space_doc = _section(doc, "space")
    try:
        space = parse_space(space_doc)
    except SpaceError as exc:
        raise ConfigError(f"space.{exc.path}: {exc.message}") from None

    tuner = _section(doc, "tuner")
    name = tuner.get("name")
    if name not in TUNERS:
        raise ConfigError(f"tuner.name: expected one of {TUNERS}, got {name!r}")
    fairness = tuner.get("fairness", "static")
    if fairness not in FAIRNESS_MODES:
        raise ConfigError(f"tuner.fairness: expected one of {FAIRNESS_MODES}, got {fairness!r}")
    if fairness == "auto" and name != "hyperband":
        raise ConfigError("tuner.fairness: auto alpha is only supported with hyperband")
    alpha = float(tuner.get("alpha", 0.5))
    if not 0 <= alpha <= 1:
        raise ConfigError(f"tuner.alpha: must lie in [0, 1], got {alpha}")
    R = float(tuner.get("R", 100))
    eta = tuner.get("eta", 3)
    total = float(tuner.get("total_budget", 2400))
    if R < 1:
        raise ConfigError("tuner.R: must be >= 1")
    if not isinstance(eta, int) or eta < 2:
        raise ConfigError("tuner.eta: must be an integer >= 2")
    if total < R:
        raise ConfigError(f"tuner.total_budget: {total} is below R={R}")

    try:
        metric = MetricSpec.from_dict(_section(doc, "metrics", required=False))
    except (ValueError, TunerError) as exc:
        raise ConfigError(f"metrics: {exc}") from None

    run = _section(doc, "run")
    seeds = run.get("seeds")
    if seeds is None:
        seeds = list(range(int(run.get("n_seeds", 1))))
    if not seeds or not all(isinstance(s, int) for s in seeds):
        raise ConfigError("run.seeds: need a non-empty list of integers")
    out = os.environ.get(OUTPUT_ENV) or run.get("output_dir", "runs")
    out = Path(out)
    if not out.is_absolute():
        out = base_dir / out

    evaluator = dict(_section(doc, "evaluator", required=False))
    evaluator.setdefault("kind", "synthetic" if kind == "synthetic" else "builtin")
    if evaluator["kind"] not in ("builtin", "synthetic", "external"):
        raise ConfigError(f"evaluator.kind: unknown kind {evaluator['kind']!r}")
    if evaluator["kind"] == "external" and not evaluator.get("command"):
        raise ConfigError("evaluator.command: required for external evaluators")

    return ExperimentConfig(
        name=str(run.get("name", "run")),
        dataset=dataset,
        space=space,
        space_document=space_doc,
        tuner=name,
        fairness=fairness,
        alpha=alpha,
        R=R,
        eta=eta,
        total_budget=total,
        metric=metric,
        seeds=tuple(seeds),
        output_dir=out,
        evaluator=evaluator,
        n_workers=int(tuner.get("n_workers", 1)),
        tpe={k: tuner[k] for k in ("gamma", "n_candidates", "n_warmup") if k in tuner},
        record_wall_time=bool(run.get("record_wall_time", False)),
        base_dir=base_dir,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(doc, base_dir=path.parent)
