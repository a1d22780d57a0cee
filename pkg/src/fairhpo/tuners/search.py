"""Random search, TPE and Hyperband/Fairband search loops.

Evaluators are callables ``EvaluationRequest -> EvaluationResult``. Each trial
gets its evaluation seed from (base seed, trial id), so running evaluations
concurrently (``n_workers > 1``) cannot change any result.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from ..evaluators.base import EvaluationError, EvaluationRequest, EvaluationResult
from ..metrics import dynamic_alpha
from ..searchspace import Configuration, SearchSpace, sample
from ..seeding import derive_seed
from .records import AlphaPolicy, TrialFailed, TrialRecord, TunerError
from .schedule import bracket_schedule, rung_fraction
from .tpe import GAMMA, N_CANDIDATES, N_WARMUP, tpe_suggest

Evaluator = Callable[[EvaluationRequest], EvaluationResult]


def _evaluate_all(evaluator, requests, n_workers):
    """Run requests, returning results or exceptions in request order."""

    def one(req):
        try:
            return evaluator(req)
        except EvaluationError as exc:
            return exc

    if n_workers <= 1 or len(requests) <= 1:
        return [one(r) for r in requests]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(one, requests))


def _policy(alpha) -> AlphaPolicy:
    if isinstance(alpha, AlphaPolicy):
        return alpha
    return AlphaPolicy.static(alpha)


def _full_budget_trials(configs, evaluator, R, alpha, base_seed, first_id, n_workers, strict=True):
    requests = [EvaluationRequest(c, 1.0, derive_seed(base_seed, "eval", c.id)) for c in configs]
    results = _evaluate_all(evaluator, requests, n_workers)
    out = []
    for i, (req, res) in enumerate(zip(requests, results)):
        if isinstance(res, Exception):
            if strict:
                raise TrialFailed(req.config, res)
            out.append(TrialRecord.failed(first_id + i, req.config, float(R), alpha, res, seed=req.seed))
            continue
        out.append(
            TrialRecord.evaluated(
                first_id + i, req.config, float(R), res.accuracy, res.fairness, alpha, seed=req.seed, wall_time=res.wall_time
            )
        )
    return out


def run_random_search(
    space: SearchSpace,
    evaluator: Evaluator,
    total_budget: float,
    alpha: float | AlphaPolicy = 0.5,
    rng: np.random.Generator | None = None,
    R: float = 100,
    n_workers: int = 1,
) -> list[TrialRecord]:
    """``floor(total_budget / R)`` uniformly sampled configurations at full budget.

    ``alpha=1`` is plain (fairness-blind) random search.
    """
    policy = _policy(alpha)
    if policy.mode != "static":
        raise TunerError("random search supports a static alpha only")
    if total_budget < R:
        raise TunerError(f"total_budget {total_budget} is below one full-budget trial (R={R})")
    rng = rng if rng is not None else np.random.default_rng()
    base_seed = int(rng.integers(2**63 - 1))
    n = int(total_budget // R)
    configs = [sample(space, rng, config_id=i) for i in range(n)]
    return _full_budget_trials(configs, evaluator, R, policy.value, base_seed, 0, n_workers)


def run_tpe(
    space: SearchSpace,
    evaluator: Evaluator,
    total_budget: float,
    alpha_policy: float | AlphaPolicy = 0.5,
    rng: np.random.Generator | None = None,
    R: float = 100,
    gamma: float = GAMMA,
    n_candidates: int = N_CANDIDATES,
    n_warmup: int = N_WARMUP,
) -> list[TrialRecord]:
    """Sequential TPE at full budget, scoring trials with a fixed alpha."""
    policy = _policy(alpha_policy)
    if policy.mode != "static":
        raise TunerError("TPE needs a stable objective; use a static alpha")
    if total_budget < R:
        raise TunerError(f"total_budget {total_budget} is below one full-budget trial (R={R})")
    rng = rng if rng is not None else np.random.default_rng()
    base_seed = int(rng.integers(2**63 - 1))
    history: list[TrialRecord] = []
    for i in range(int(total_budget // R)):
        config = tpe_suggest(history, space, gamma, n_candidates, rng, n_warmup=n_warmup, config_id=i)
        history += _full_budget_trials([config], evaluator, R, policy.value, base_seed, i, 1)
    return history


def _rank_key(t: TrialRecord):
    return (-t.rank_goal, -t.budget, t.trial_id)


def run_fairband(
    space: SearchSpace,
    evaluator: Evaluator,
    R: float = 100,
    eta: int = 3,
    alpha_policy: float | AlphaPolicy = 0.5,
    rng: np.random.Generator | None = None,
    n_workers: int = 1,
    iterations: int = 1,
    sampler: Callable[[np.random.Generator, int], Configuration] | None = None,
) -> list[TrialRecord]:
    """Hyperband with scalarized ranking; ``alpha_policy=auto`` is FB-auto.

    Brackets run from the most aggressive (``s = s_max``) down to plain full
    budget evaluation. Within a rung, auto mode sets the weight from the
    rung's mean fairness and accuracy; survivors are the ``keep`` trials with
    the highest goal (ties: smaller trial id).
    Failed evaluations are logged and rank last. ``alpha_policy=1`` is
    fairness-blind Hyperband.
    """
    policy = _policy(alpha_policy)
    schedule = bracket_schedule(R, eta)
    rng = rng if rng is not None else np.random.default_rng()
    base_seed = int(rng.integers(2**63 - 1))
    sampler = sampler or (lambda g, cid: sample(space, g, config_id=cid))
    trials: list[TrialRecord] = []
    next_config = 0
    for _ in range(iterations):
        for bracket in schedule.brackets:
            survivors = []
            for _ in range(bracket.n):
                survivors.append(sampler(rng, next_config))
                next_config += 1
            for i, rung in enumerate(bracket.rungs):
                fraction = rung_fraction(schedule.eta, bracket.s, i)
                survivors = survivors[: rung.n]
                requests = [
                    EvaluationRequest(c, fraction, derive_seed(base_seed, f"eval-b{bracket.s}-r{i}", c.id))
                    for c in survivors
                ]
                results = _evaluate_all(evaluator, requests, n_workers)
                good = [r for r in results if not isinstance(r, Exception)]
                if policy.mode == "auto" and good:
                    alpha = dynamic_alpha(
                        math.fsum(r.fairness for r in good) / len(good),
                        math.fsum(r.accuracy for r in good) / len(good),
                    )
                elif policy.mode == "auto":
                    alpha = 0.5
                else:
                    alpha = policy.value
                rung_trials = []
                for req, res in zip(requests, results):
                    kw = dict(bracket=bracket.s, rung=i, seed=req.seed, policy=policy.mode)
                    tid = len(trials) + len(rung_trials)
                    if isinstance(res, Exception):
                        rung_trials.append(TrialRecord.failed(tid, req.config, rung.budget, alpha, res, **kw))
                    else:
                        rung_trials.append(
                            TrialRecord.evaluated(
                                tid, req.config, rung.budget, res.accuracy, res.fairness, alpha,
                                wall_time=res.wall_time, **kw,
                            )
                        )
                trials += rung_trials
                ranked = sorted(rung_trials, key=_rank_key)
                survivors = [t.config for t in ranked[: rung.keep]]
    return trials
