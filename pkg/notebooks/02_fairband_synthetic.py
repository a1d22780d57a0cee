# %% [markdown]
# # Fairband on a synthetic trade-off surface
#
# The synthetic evaluator places accuracy and fairness peaks in different
# regions of the search space, so no configuration maximises both. Low-budget
# evaluations are noisy and slightly less accurate, like models fitted on a
# small slice of the data.

# %%
import numpy as np

from fairhpo.evaluators import SurfaceSpec, SyntheticEvaluator
from fairhpo.harness import frontier_trials, rung_pareto_density
from fairhpo.searchspace import parse_space
from fairhpo.tuners import AlphaPolicy, run_fairband, select_model

space = parse_space({
    "selector": {"name": "model", "values": ["a", "b"]},
    "branches": {
        "a": {"x": {"kind": "uniform", "low": 0.0, "high": 1.0}, "y": {"kind": "uniform", "low": 0.0, "high": 1.0}},
        "b": {"z": {"kind": "log-uniform", "low": 1e-3, "high": 1.0}, "k": {"kind": "int", "low": 1, "high": 9}},
    },
})
surface = SurfaceSpec.random(space, seed=0, noise=0.02, accuracy_shift=0.05)
evaluator = SyntheticEvaluator(surface)

# %% [markdown]
# Three weightings: fairness-blind Hyperband (alpha = 1), Fairband with a
# fixed alpha = 0.5, and FB-auto, which re-weights every rung toward the
# objective that is lagging.

# %%
policies = {"HB": AlphaPolicy.static(1.0), "FB 0.5": AlphaPolicy.static(0.5), "FB-auto": AlphaPolicy.auto()}
runs = {}
for name, policy in policies.items():
    trials = run_fairband(space, evaluator, 100, 3, policy, np.random.default_rng(1))
    chosen = select_model(trials, policy)
    runs[name] = trials
    print(f"{name:8s} selected a={chosen.trial.accuracy:.3f} f={chosen.trial.fairness:.3f} "
          f"(alpha={chosen.alpha:.3f}, budget={chosen.trial.budget:g})")

# %% [markdown]
# FB-auto's weights per rung of the largest bracket:

# %%
auto = runs["FB-auto"]
for i in range(5):
    rung = [t for t in auto if t.bracket == 4 and t.rung == i]
    print(f"rung {i}: {len(rung):2d} trials, alpha = {rung[0].alpha_used:.3f}")

# %% [markdown]
# Share of each rung's trials that end up on the run's Pareto frontier. Later
# rungs hold better-trained survivors, so the share grows.

# %%
density = rung_pareto_density(auto)
print([round(density[(4, i)], 3) for i in range(5)])
print("frontier size:", len(frontier_trials(auto)), "of", len(auto), "trials")
