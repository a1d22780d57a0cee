import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from fairhpo.datakit import Dataset, LabelAccessError
from fairhpo.harness import (
    OUTPUT_ENV,
    ConfigError,
    compare_runs,
    emit_plot_data,
    frontier_trials,
    load_config,
    parse_config,
    read_log,
    read_summary,
    replay_selection,
    run_experiment,
    rung_pareto_density,
)
from fairhpo.harness.cli import main
from fairhpo.metrics import pareto_mask
from fairhpo.searchspace import Configuration
from fairhpo.tuners import TrialRecord, bracket_schedule

from oracles import analytic_total

TOY_SPACE = """
[space.selector]
name = "model"
values = ["logreg", "tree"]

[space.branches.logreg.learning_rate]
kind = "log-uniform"
low = 0.01
high = 0.5

[space.branches.logreg.epochs]
kind = "int"
low = 1
high = 30

[space.branches.tree.max_depth]
kind = "int"
low = 1
high = 4
"""


def write_toy_csv(path: Path, n=500, seed=0):
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < 0.3).astype(int)
    grp = np.where(rng.random(n) < 0.5, "A", "B")
    kind = rng.choice(["u", "v", "w"], n)
    a = y + rng.normal(0, 1, n) + (grp == "A") * 0.5
    b = 0.5 * y + rng.normal(0, 1, n)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["a", "b", "kind", "grp", "label"])
        for row in zip(a, b, kind, grp, y):
            w.writerow([f"{row[0]:.6f}", f"{row[1]:.6f}", row[2], row[3], row[4]])


def toy_config(tmp_path, tuner="rs", fairness="static", seeds=(0, 1), total=300, extra="", name="toy"):
    data = tmp_path / "toy.csv"
    if not data.exists():
        write_toy_csv(data)
    text = f"""
[dataset]
path = "toy.csv"
label = "label"
sensitive = "grp"
categorical = ["kind"]
split = [0.6, 0.2, 0.2]
{TOY_SPACE}
[tuner]
name = "{tuner}"
fairness = "{fairness}"
alpha = 0.5
R = 100
eta = 3
total_budget = {total}
{extra}

[metrics]
accuracy = "precision"
fairness = "predictive_equality"
threshold_mode = "fpr_at"
threshold_value = 0.1
min_support = 5

[run]
name = "{name}"
seeds = {list(seeds)}
output_dir = "out"
"""
    path = tmp_path / f"{name}.toml"
    path.write_text(text)
    return path


def synth_config(tmp_path, name="syn", fairness="auto", seeds=(0,), extra=""):
    text = f"""
[dataset]
kind = "synthetic"
surface_seed = 1
noise = 0.05

[space.selector]
name = "model"
values = ["a", "b"]
[space.branches.a.x]
kind = "uniform"
low = 0.0
high = 1.0
[space.branches.b.z]
kind = "log-uniform"
low = 0.001
high = 1.0

[tuner]
name = "hyperband"
fairness = "{fairness}"
R = 27
eta = 3
total_budget = 200
{extra}

[run]
name = "{name}"
seeds = {list(seeds)}
output_dir = "out"
"""
    path = tmp_path / f"{name}.toml"
    path.write_text(text)
    return path


def tr(i, a, f, bracket=0, rung=0, budget=100.0):
    return TrialRecord.evaluated(i, Configuration(i, {"model": "a", "x": 0.5}), budget, a, f, 0.5, bracket=bracket, rung=rung)


# ---- configuration ----------------------------------------------------------


def test_config_loads_and_resolves_paths(tmp_path):
    cfg = load_config(toy_config(tmp_path))
    assert cfg.tuner == "rs" and cfg.seeds == (0, 1)
    assert cfg.dataset_path() == tmp_path / "toy.csv"
    assert cfg.run_dir == tmp_path / "out" / "toy"
    assert cfg.alpha_policy.value == 0.5


def test_repo_configs_validate():
    root = Path(__file__).resolve().parents[1] / "configs"
    for path in sorted(root.glob("*.toml")):
        cfg = load_config(path)
        assert cfg.dataset_path().exists()
        assert len(cfg.seeds) == 15


@pytest.mark.parametrize(
    "tuner_block, message",
    [
        ('name = "hyperband"\nfairness = "bogus"', "tuner.fairness"),
        ('name = "rs"\nfairness = "auto"', "auto alpha"),
        ('name = "sgd"', "tuner.name"),
        ('name = "rs"\nalpha = 1.5', "tuner.alpha"),
        ('name = "hyperband"\neta = 2.5', "tuner.eta"),
        ('name = "rs"\ntotal_budget = 50', "total_budget"),
    ],
)
def test_config_errors(tuner_block, message):
    doc = {
        "dataset": {"kind": "synthetic"},
        "space": {"selector": {"name": "m", "values": ["a"]}, "branches": {"a": {}}},
        "tuner": dict(line.split(" = ") for line in tuner_block.splitlines()),
        "run": {"seeds": [0]},
    }
    doc["tuner"] = {k: json.loads(v) for k, v in doc["tuner"].items()}
    with pytest.raises(ConfigError, match=message):
        parse_config(doc)


def test_config_error_paths(tmp_path):
    with pytest.raises(ConfigError, match="no such file"):
        load_config(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[dataset\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    doc = {"dataset": {"kind": "synthetic"}, "space": {"selector": {"name": "m", "values": ["a"]}, "branches": {"a": {"x": {"kind": "uniform", "low": 1, "high": 0}}}}, "tuner": {"name": "rs"}, "run": {}}
    with pytest.raises(ConfigError, match=r"space\.branches\.a\.x"):
        parse_config(doc)
    doc = {"dataset": {"path": "x.csv", "label": "y", "sensitive": "g", "split": [0.5, 0.5]}, "space": {}, "tuner": {}, "run": {}}
    with pytest.raises(ConfigError, match="dataset.split"):
        parse_config(doc)


def test_output_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "elsewhere"))
    cfg = load_config(toy_config(tmp_path))
    assert cfg.run_dir == tmp_path / "elsewhere" / "toy"


# ---- running experiments ----------------------------------------------------


def test_two_seed_run_writes_logs_and_summary(tmp_path):
    cfg = load_config(toy_config(tmp_path))
    summary = run_experiment(cfg)
    logs = sorted(cfg.run_dir.glob("trials-seed*.jsonl"))
    assert [p.name for p in logs] == ["trials-seed0.jsonl", "trials-seed1.jsonl"]
    assert len(summary["seeds"]) == 2
    assert read_summary(cfg.run_dir / "summary.json") == summary
    for row, path in zip(summary["seeds"], logs):
        trials = read_log(path)
        assert row["status"] == "ok" and row["n_trials"] == len(trials) == 3
        assert row["consumed_budget"] == math.fsum(t.budget for t in trials)
        assert row["test"] is not None
        assert 0 <= row["test"]["accuracy"] <= 1 and 0 <= row["test"]["fairness"] <= 1


def test_rerun_is_byte_identical(tmp_path):
    cfg = load_config(toy_config(tmp_path, seeds=(3,), total=500))
    run_experiment(cfg)
    first = (cfg.run_dir / "trials-seed3.jsonl").read_bytes()
    summary_first = (cfg.run_dir / "summary.json").read_bytes()
    run_experiment(cfg)
    assert (cfg.run_dir / "trials-seed3.jsonl").read_bytes() == first
    assert (cfg.run_dir / "summary.json").read_bytes() == summary_first


@pytest.mark.slow
def test_hyperband_seed_consumes_analytic_budget(tmp_path):
    cfg = load_config(toy_config(tmp_path, tuner="hyperband", fairness="auto", seeds=(0,), total=2400))
    summary = run_experiment(cfg)
    row = summary["seeds"][0]
    assert row["status"] == "ok"
    assert row["consumed_budget"] == float(analytic_total(100, 3))
    trials = read_log(cfg.run_dir / "trials-seed0.jsonl")
    assert len(trials) == sum(r.n for b in bracket_schedule(100, 3).brackets for r in b.rungs)
    chosen = replay_selection(trials)
    assert chosen.trial.trial_id == row["selected_trial"]
    assert chosen.alpha == row["selection_alpha"]
    if row["selected_budget"] < 100:
        assert row["retrained_validation"] is not None


def test_summary_is_replayable(tmp_path):
    base = load_config(synth_config(tmp_path, "blind", "blind", seeds=(0, 1, 2)))
    fair = load_config(synth_config(tmp_path, "auto", "auto", seeds=(0, 1, 2)))
    s_base = run_experiment(base)
    s_fair = run_experiment(fair, baseline=s_base)
    for row in s_fair["seeds"]:
        trials = read_log(fair.run_dir / f"trials-seed{row['seed']}.jsonl")
        chosen = replay_selection(trials)
        assert chosen.trial.trial_id == row["selected_trial"]
        assert chosen.alpha == row["selection_alpha"]
        assert row["validation"] == {"accuracy": chosen.trial.accuracy, "fairness": chosen.trial.fairness}
    for metric, entry in s_fair["comparisons"].items():
        assert (entry["D"], entry["p"]) == compare_runs(s_fair, s_base, metric)
        assert entry["baseline"] == "blind"


def test_failed_seed_is_recorded(tmp_path):
    cfg = load_config(toy_config(tmp_path, seeds=(0,)))
    (tmp_path / "toy.csv").write_text("a,b,kind,grp\n1,2,u,A\n")
    summary = run_experiment(cfg)
    assert summary["seeds"][0]["status"] == "failed"
    assert "label" in summary["seeds"][0]["error"]
    assert summary["aggregate"]["n_failed"] == 1


def test_test_labels_stay_sealed_until_final_evaluation(tmp_path, monkeypatch):
    events = []
    import fairhpo.metrics as metrics_mod

    real_calibrate = metrics_mod.calibrate_threshold
    real_unseal = Dataset.unseal

    def calibrate(*a, **k):
        events.append("calibrate")
        return real_calibrate(*a, **k)

    def unseal(self):
        events.append("unseal")
        return real_unseal(self)

    monkeypatch.setattr(metrics_mod, "calibrate_threshold", calibrate)
    monkeypatch.setattr(Dataset, "unseal", unseal)
    cfg = load_config(toy_config(tmp_path, seeds=(0,), total=400))
    summary = run_experiment(cfg)
    assert summary["seeds"][0]["status"] == "ok"
    assert events.count("unseal") == 1
    # The only unseal follows the final calibration on validation data.
    assert events[-2:] == ["calibrate", "unseal"]
    assert events.count("calibrate") == 4 + 1


def test_sealed_dataset_guards_labels():
    from conftest import toy_dataset

    sealed = toy_dataset(50).seal()
    with pytest.raises(LabelAccessError):
        sealed.y
    assert len(sealed.unseal().y) == 50


# ---- comparisons ------------------------------------------------------------


def summary_of(values, name="x"):
    return {"name": name, "seeds": [{"status": "ok", "validation": {"accuracy": v, "fairness": v}, "test": None} for v in values]}


def ecdf_d(a, b):
    grid = sorted(set(a) | set(b))
    return max(abs(sum(x <= t for x in a) / len(a) - sum(x <= t for x in b) / len(b)) for t in grid)


def test_compare_identical_and_disjoint():
    d, p = compare_runs(summary_of([0.1, 0.2, 0.3]), summary_of([0.1, 0.2, 0.3]), "validation_fairness")
    assert d == 0 and p == 1
    d, _ = compare_runs(summary_of([0.1, 0.2]), summary_of([0.5, 0.6]), "validation_accuracy")
    assert d == 1


@pytest.mark.parametrize("seed", range(5))
def test_compare_matches_ecdf_oracle(seed):
    rng = np.random.default_rng(seed)
    a, b = rng.random(15).round(2).tolist(), (rng.random(15) * 0.8 + 0.1).round(2).tolist()
    d, p = compare_runs(summary_of(a), summary_of(b), "validation_fairness")
    assert d == pytest.approx(ecdf_d(a, b), abs=1e-12)
    assert 0 <= p <= 1


def test_compare_errors():
    with pytest.raises(KeyError):
        compare_runs(summary_of([0.1, 0.2]), summary_of([0.1, 0.2]), "test_fairness")
    with pytest.raises(KeyError):
        compare_runs(summary_of([0.1, 0.2]), summary_of([0.1, 0.2]), "nonsense")
    with pytest.raises(ValueError):
        compare_runs(summary_of([0.1]), summary_of([0.1, 0.2]), "validation_fairness")


# ---- rung analytics ---------------------------------------------------------


def test_rung_density_examples():
    assert rung_pareto_density([tr(0, 0.5, 0.5)]) == {(0, 0): 1.0}
    same = [tr(i, 0.4, 0.6, bracket=1, rung=i % 2) for i in range(6)]
    assert set(rung_pareto_density(same).values()) == {1.0}
    with pytest.raises(ValueError):
        rung_pareto_density([tr(0, 0.5, 0.5, bracket=-1, rung=-1)])


def test_rung_density_matches_recomputation(tmp_path):
    cfg = load_config(synth_config(tmp_path))
    run_experiment(cfg)
    trials = read_log(cfg.run_dir / "trials-seed0.jsonl")
    ok = [t for t in trials if t.ok]
    front = {
        t.trial_id for t in ok
        if not any(o.accuracy >= t.accuracy and o.fairness >= t.fairness and (o.accuracy > t.accuracy or o.fairness > t.fairness) for o in ok)
    }
    density = rung_pareto_density(trials)
    cells = {(t.bracket, t.rung) for t in trials}
    assert set(density) == cells
    for cell in cells:
        members = [t for t in trials if (t.bracket, t.rung) == cell]
        assert density[cell] == sum(t.trial_id in front for t in members) / len(members)


# ---- plot data ----------------------------------------------------------------


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_plot_data_kinds(tmp_path):
    cfg = load_config(synth_config(tmp_path, seeds=(0, 1)))
    run_experiment(cfg)
    paths = sorted(cfg.run_dir.glob("trials-seed*.jsonl"))
    logs = {p: read_log(p) for p in paths}

    n = emit_plot_data(logs, "scatter", tmp_path / "scatter.csv")
    rows = read_csv(tmp_path / "scatter.csv")
    assert n == len(rows) == sum(len(v) for v in logs.values())
    assert list(rows[0]) == ["run", "seed", "trial_id", "bracket", "rung", "budget", "accuracy", "fairness", "alpha_used", "goal", "selected"]
    assert sum(int(r["selected"]) for r in rows) == 2

    emit_plot_data(logs, "frontier", tmp_path / "front.csv")
    rows = read_csv(tmp_path / "front.csv")
    for p, trials in logs.items():
        seed = str(int(p.stem.removeprefix("trials-seed")))
        got = {int(r["trial_id"]) for r in rows if r["seed"] == seed}
        mask = pareto_mask([(t.accuracy, t.fairness) for t in trials])
        assert got == {t.trial_id for t, m in zip(trials, mask) if m}
        assert got == {t.trial_id for t in frontier_trials(trials)}

    emit_plot_data(logs, "heatmap", tmp_path / "heat.csv")
    rows = read_csv(tmp_path / "heat.csv")
    for p, trials in logs.items():
        seed = str(int(p.stem.removeprefix("trials-seed")))
        got = {(int(r["bracket"]), int(r["rung"])): float(r["density"]) for r in rows if r["seed"] == seed}
        assert got == pytest.approx(rung_pareto_density(trials))

    with pytest.raises(ValueError):
        emit_plot_data(logs, "violin", tmp_path / "x.csv")


# ---- CLI ------------------------------------------------------------------


def test_cli_schedule(capsys):
    assert main(["schedule", "--max-budget", "100", "--eta", "3"]) == 0
    out = capsys.readouterr().out
    assert "81    1.23" in out and "5  100.00" in out


def test_cli_validate_and_exit_codes(tmp_path, capsys):
    good = toy_config(tmp_path)
    assert main(["validate", str(good)]) == 0
    bad = tmp_path / "bad.toml"
    bad.write_text('[dataset]\nkind = "synthetic"\n[space.selector]\nvalues = ["a"]\n[tuner]\nname = "nope"\n[run]\n')
    assert main(["validate", str(bad)]) == 1
    assert "tuner.name" in capsys.readouterr().err
    assert main(["schedule", "--eta", "1"]) == 1
    assert main(["pareto", str(tmp_path / "missing.jsonl")]) == 2


def test_cli_run_pareto_compare_plot(tmp_path, capsys):
    blind = synth_config(tmp_path, "blind", "blind", seeds=(0, 1))
    auto = synth_config(tmp_path, "auto", "auto", seeds=(0, 1))
    assert main(["run", str(blind)]) == 0
    base_summary = tmp_path / "out" / "blind" / "summary.json"
    assert main(["run", str(auto), "--baseline", str(base_summary)]) == 0
    auto_summary = tmp_path / "out" / "auto" / "summary.json"
    assert read_summary(auto_summary)["comparisons"]
    capsys.readouterr()

    log = tmp_path / "out" / "auto" / "trials-seed0.jsonl"
    assert main(["pareto", str(log)]) == 0
    out = capsys.readouterr().out
    assert "trial_id,budget,accuracy,fairness" in out and "bracket,rung,density" in out

    assert main(["compare", str(auto_summary), str(base_summary), "--metric", "validation_accuracy"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["metric"] == "validation_accuracy" and 0 <= result["p"] <= 1

    out_csv = tmp_path / "plot.csv"
    assert main(["plot-data", str(log), "--kind", "heatmap", "--out", str(out_csv)]) == 0
    assert len(read_csv(out_csv)) == len(rung_pareto_density(read_log(log)))


def test_cli_run_reports_failed_seed(tmp_path):
    path = toy_config(tmp_path, seeds=(0,))
    (tmp_path / "toy.csv").write_text("a,b,kind,grp\n1,2,u,A\n")
    assert main(["run", str(path)]) == 2


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "fairhpo", "schedule", "--max-budget", "9"], capture_output=True, text=True)
    assert proc.returncode == 0 and "total budget: 78.0000" in proc.stdout
