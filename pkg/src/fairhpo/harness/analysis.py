"""Analytics over persisted trial logs: frontiers, rung densities, plot tables."""
from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

from ..metrics import pareto_mask
from ..tuners.records import AlphaPolicy, TrialRecord
from ..tuners.selection import Selection, select_model

PLOT_COLUMNS = (
    "run", "seed", "trial_id", "bracket", "rung", "budget",
    "accuracy", "fairness", "alpha_used", "goal", "selected",
)
PLOT_KINDS = ("scatter", "frontier", "heatmap")


def replay_selection(trials) -> Selection:
    """Redo model selection from a log alone (policy is recorded per trial)."""
    ok = [t for t in trials if t.ok]
    if ok and ok[0].policy == "auto":
        return select_model(trials, AlphaPolicy.auto())
    return select_model(trials, AlphaPolicy.static(ok[0].alpha_used if ok else 0.5))


def frontier_trials(trials) -> list[TrialRecord]:
    ok = [t for t in trials if t.ok]
    if not ok:
        return []
    mask = pareto_mask([(t.accuracy, t.fairness) for t in ok])
    return [t for t, keep in zip(ok, mask) if keep]


def rung_pareto_density(trials) -> dict[tuple[int, int], float]:
    """Share of each (bracket, rung) cell's trials lying on the run's frontier.

    The frontier is taken over every successful trial of the run; failed
    trials count in a cell's denominator.
    """
    trials = list(trials)
    if not trials or any(t.bracket < 0 or t.rung < 0 for t in trials):
        raise ValueError("rung density needs a non-empty log from a bandit tuner")
    on_front = {t.trial_id for t in frontier_trials(trials)}
    hits, sizes = defaultdict(int), defaultdict(int)
    for t in trials:
        key = (t.bracket, t.rung)
        sizes[key] += 1
        hits[key] += t.trial_id in on_front
    return {k: hits[k] / sizes[k] for k in sorted(sizes, key=lambda k: (-k[0], k[1]))}


def _run_seed(path: Path, trials):
    seed = None
    stem = path.stem
    if stem.startswith("trials-seed"):
        try:
            seed = int(stem[len("trials-seed"):])
        except ValueError:
            pass
    return path.parent.name, seed


def plot_rows(logs: dict[Path, list[TrialRecord]], kind: str) -> list[dict]:
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; expected one of {PLOT_KINDS}")
    rows = []
    for path, trials in logs.items():
        run, seed = _run_seed(Path(path), trials)
        if kind == "heatmap":
            for (b, r), d in rung_pareto_density(trials).items():
                rows.append({"run": run, "seed": seed, "bracket": b, "rung": r, "density": d})
            continue
        selected = replay_selection(trials).trial.trial_id if any(t.ok for t in trials) else None
        chosen = trials if kind == "scatter" else frontier_trials(trials)
        for t in chosen:
            rows.append({
                "run": run, "seed": seed, "trial_id": t.trial_id, "bracket": t.bracket, "rung": t.rung,
                "budget": t.budget, "accuracy": t.accuracy, "fairness": t.fairness,
                "alpha_used": t.alpha_used, "goal": t.goal, "selected": int(t.trial_id == selected),
            })
    return rows


def emit_plot_data(logs: dict[Path, list[TrialRecord]], kind: str, out) -> int:
    """Write a CSV for plotting; returns the number of data rows.

    ``scatter``: every trial. ``frontier``: the Pareto set of each log.
    ``heatmap``: per (bracket, rung) Pareto density of each log.
    """
    rows = plot_rows(logs, kind)
    columns = ("run", "seed", "bracket", "rung", "density") if kind == "heatmap" else PLOT_COLUMNS
    with Path(out).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: "" if r[k] is None else r[k] for k in columns})
    return len(rows)
