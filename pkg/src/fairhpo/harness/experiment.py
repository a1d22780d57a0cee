"""Multi-seed experiment orchestration and trial-log persistence."""
from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import replace
from pathlib import Path

from ..datakit import DataWarning, load_csv, split
from ..evaluators import BuiltinEvaluator, ExternalEvaluator, SurfaceSpec, SyntheticEvaluator
from ..evaluators.base import EvaluationError, EvaluationRequest
from ..metrics import ks_test
from ..seeding import derive_rng, derive_seed
from ..tuners import bracket_schedule, run_fairband, run_random_search, run_tpe, select_model
from ..tuners.records import TrialRecord
from .config import ExperimentConfig

log = logging.getLogger(__name__)


def log_path(run_dir: Path, seed: int) -> Path:
    return Path(run_dir) / f"trials-seed{seed}.jsonl"


def write_log(path: Path, trials, record_wall_time: bool = False):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for t in trials:
            if not record_wall_time:
                t = replace(t, wall_time=0.0)
            fh.write(t.to_json() + "\n")


def read_log(path) -> list[TrialRecord]:
    with Path(path).open(encoding="utf-8") as fh:
        return [TrialRecord.from_dict(json.loads(line)) for line in fh if line.strip()]


def _schedule_fractions(cfg: ExperimentConfig):
    if cfg.tuner == "hyperband":
        return bracket_schedule(cfg.R, cfg.eta).fractions()
    return [1.0]


class _Seeded:
    """Per-seed data and evaluator setup."""

    def __init__(self, cfg: ExperimentConfig, seed: int, cache: dict):
        self.cfg = cfg
        self.test = None
        kind = cfg.evaluator["kind"]
        if cfg.dataset["kind"] == "synthetic":
            surface = SurfaceSpec.random(
                cfg.space,
                int(cfg.dataset.get("surface_seed", 0)),
                noise=float(cfg.dataset.get("noise", 0.02)),
                accuracy_shift=float(cfg.dataset.get("accuracy_shift", 0.0)),
            )
            self.evaluator = SyntheticEvaluator(surface)
            return
        if kind == "external":
            self.evaluator = cache.setdefault(
                "external",
                ExternalEvaluator(
                    cfg.evaluator["command"],
                    timeout=float(cfg.evaluator.get("timeout", 600)),
                    workers=int(cfg.evaluator.get("workers", cfg.n_workers)),
                ),
            )
            return
        if "data" not in cache:
            cache["data"] = load_csv(cfg.dataset_path(), cfg.dataset)
        data = cache["data"]
        split_seed = int(cfg.dataset.get("split_seed", 0))
        if cfg.dataset["split_mode"] == "per_seed":
            split_seed = derive_seed(seed, "split")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DataWarning)
            key = ("split", split_seed)
            if key not in cache:
                cache[key] = split(data, cfg.dataset["split"], split_seed)
            train, val, test = cache[key]
            self.test = test.seal()
            self.evaluator = BuiltinEvaluator(
                train,
                val,
                cfg.metric,
                fractions=_schedule_fractions(cfg),
                data_seed=derive_seed(seed, "data"),
                selector=cfg.space.selector_name,
            )


def run_tuner(cfg: ExperimentConfig, evaluator, seed: int) -> list[TrialRecord]:
    rng = derive_rng(seed, "tuner")
    policy = cfg.alpha_policy
    if cfg.tuner == "rs":
        return run_random_search(cfg.space, evaluator, cfg.total_budget, policy, rng, R=cfg.R, n_workers=cfg.n_workers)
    if cfg.tuner == "tpe":
        return run_tpe(cfg.space, evaluator, cfg.total_budget, policy, rng, R=cfg.R, **cfg.tpe)
    one_pass = bracket_schedule(cfg.R, cfg.eta).total_budget
    iterations = max(1, int(cfg.total_budget // one_pass))
    return run_fairband(cfg.space, evaluator, cfg.R, cfg.eta, policy, rng, n_workers=cfg.n_workers, iterations=iterations)


def _point(a, f):
    return {"accuracy": a, "fairness": f}


def run_seed(cfg: ExperimentConfig, seed: int, cache: dict) -> dict:
    setup = _Seeded(cfg, seed, cache)
    trials = run_tuner(cfg, setup.evaluator, seed)
    write_log(log_path(cfg.run_dir, seed), trials, cfg.record_wall_time)
    chosen = select_model(trials, cfg.alpha_policy)
    row = {
        "seed": seed,
        "status": "ok",
        "selected_trial": chosen.trial.trial_id,
        "selected_config": chosen.config.to_dict(),
        "selected_budget": chosen.trial.budget,
        "selection_alpha": chosen.alpha,
        "validation": _point(chosen.trial.accuracy, chosen.trial.fairness),
        "test": None,
        "retrained_validation": None,
        "consumed_budget": math.fsum(t.budget for t in trials),
        "n_trials": len(trials),
    }
    final_seed = derive_seed(seed, "final")
    if isinstance(setup.evaluator, BuiltinEvaluator):
        val, test = setup.evaluator.evaluate_on_test(chosen.config, final_seed, setup.test)
        row["test"] = _point(test.accuracy, test.fairness)
        if chosen.trial.budget < cfg.R:
            row["retrained_validation"] = _point(val.accuracy, val.fairness)
    elif isinstance(setup.evaluator, SyntheticEvaluator):
        res = setup.evaluator(EvaluationRequest(chosen.config, 1.0, final_seed))
        row["test"] = _point(res.accuracy, res.fairness)
    return row


METRICS = ("validation_accuracy", "validation_fairness", "test_accuracy", "test_fairness")


def metric_sample(summary: dict, metric: str) -> list[float]:
    if metric not in METRICS:
        raise KeyError(f"unknown metric {metric!r}; expected one of {METRICS}")
    part, key = metric.split("_")
    values = []
    for row in summary["seeds"]:
        if row.get("status") != "ok" or row.get(part) is None:
            continue
        values.append(row[part][key])
    if not values:
        raise KeyError(f"metric {metric!r} absent from summary {summary.get('name')!r}")
    return values


def compare_runs(summary_a: dict, summary_b: dict, metric: str) -> tuple[float, float]:
    """KS test between the per-seed selected-model metric of two runs."""
    a, b = metric_sample(summary_a, metric), metric_sample(summary_b, metric)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("compare_runs needs at least two seeds per summary")
    return ks_test(a, b)


def _aggregate(rows) -> dict:
    ok = [r for r in rows if r["status"] == "ok"]
    agg = {"n_ok": len(ok), "n_failed": len(rows) - len(ok)}
    for metric in METRICS:
        part, key = metric.split("_")
        vals = [r[part][key] for r in ok if r.get(part) is not None]
        agg[f"mean_{metric}"] = math.fsum(vals) / len(vals) if vals else None
    return agg


def run_experiment(cfg: ExperimentConfig, baseline: dict | None = None) -> dict:
    """Run every seed, persist per-seed trial logs and ``summary.json``.

    A failing seed is recorded in the summary and does not stop the others.
    """
    cache: dict = {}
    rows = []
    try:
        for seed in cfg.seeds:
            try:
                rows.append(run_seed(cfg, seed, cache))
            except (EvaluationError, ValueError, RuntimeError, OSError) as exc:
                log.warning("seed %s failed: %s", seed, exc)
                rows.append({"seed": seed, "status": "failed", "error": f"{type(exc).__name__}: {exc}"})
    finally:
        if "external" in cache:
            cache["external"].close()
    summary = {
        "name": cfg.name,
        "tuner": cfg.tuner,
        "fairness": cfg.fairness,
        "alpha": None if cfg.fairness == "auto" else cfg.alpha_policy.value,
        "R": cfg.R,
        "eta": cfg.eta,
        "total_budget": cfg.total_budget,
        "seeds": rows,
        "aggregate": _aggregate(rows),
        "comparisons": {},
    }
    if baseline is not None:
        for metric in METRICS:
            try:
                d, p = compare_runs(summary, baseline, metric)
            except (KeyError, ValueError):
                continue
            summary["comparisons"][metric] = {"baseline": baseline.get("name"), "D": d, "p": p}
    write_summary(cfg.run_dir / "summary.json", summary)
    return summary


def write_summary(path: Path, summary: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def read_summary(path) -> dict:
    with Path(path).open(encoding="utf-8") as fh:
        return json.load(fh)
