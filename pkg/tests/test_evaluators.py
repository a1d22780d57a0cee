import math
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import spearmanr

from fairhpo.datakit import from_arrays, split
from fairhpo.evaluators import (
    BuiltinEvaluator,
    EvaluationError,
    EvaluationRequest,
    ExternalEvaluator,
    MetricSpec,
    ProtocolError,
    SurfaceSpec,
    evaluate_external,
    evaluate_synthetic,
    logistic_loss_grad,
    train_logreg,
    train_tree,
)
from fairhpo.evaluators.external import encode_request
from fairhpo.metrics import ThresholdTarget
from fairhpo.searchspace import Configuration, sample

from conftest import toy_dataset

ECHO = [sys.executable, str(Path(__file__).with_name("echo_trainer.py"))]


def test_initial_logloss_is_ln2():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 3))
    y = np.array([0, 1] * 20, dtype=float)
    loss, _ = logistic_loss_grad(np.zeros(4), X, y, 0.1)
    assert loss == pytest.approx(math.log(2))


def central_difference(f, x, h=1e-6):
    g = np.empty_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


@pytest.mark.parametrize("point", range(20))
def test_logreg_gradient_matches_finite_differences(point):
    rng = np.random.default_rng(point)
    X = rng.normal(size=(30, 4))
    y = rng.integers(0, 2, 30).astype(float)
    sw = rng.uniform(0.5, 2.0, 30)
    params = rng.normal(size=5)
    l2 = float(rng.uniform(0, 1))
    _, grad = logistic_loss_grad(params, X, y, l2, sw)
    numeric = central_difference(lambda p: logistic_loss_grad(p, X, y, l2, sw)[0], params)
    assert np.max(np.abs(grad - numeric) / np.maximum(np.abs(numeric), 1e-8)) <= 1e-5


def test_l2_shrinks_weights():
    d = toy_dataset(400)
    free = train_logreg(d.X, d.labels, {"learning_rate": 0.5, "l2_penalty": 0.0, "epochs": 200})
    tied = train_logreg(d.X, d.labels, {"learning_rate": 0.5, "l2_penalty": 1.0, "epochs": 200})
    assert np.linalg.norm(tied.weights) < np.linalg.norm(free.weights)


def test_logreg_divergence_is_an_evaluation_error():
    d = toy_dataset(200)
    with pytest.raises(EvaluationError, match="diverged"):
        train_logreg(d.X, d.labels, {"learning_rate": 50.0, "l2_penalty": 1.0, "epochs": 200})


def test_tree_depth_zero_scores_prevalence():
    d = toy_dataset(100)
    t = train_tree(d.X, d.labels, {"max_depth": 0})
    assert t.n_leaves == 1
    assert np.allclose(t(d.X), (d.labels.sum() + 1) / (len(d) + 2))


def test_tree_solves_xor_at_depth_two():
    X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]] * 5, dtype=float)
    y = np.array([0, 1, 1, 0] * 5)
    t = train_tree(X, y, {"max_depth": 2, "min_samples_leaf": 1})
    assert np.mean((t(X) > 0.5) == y) == 1.0


def test_tree_min_leaf_n_forces_single_leaf():
    d = toy_dataset(60)
    t = train_tree(d.X, d.labels, {"max_depth": 5, "min_samples_leaf": 60})
    assert t.n_leaves == 1


@pytest.fixture
def toy_split():
    return split(toy_dataset(600, seed=2), (0.6, 0.2, 0.2), seed=0)


def make_evaluator(toy_split, **kw):
    tr, va, _ = toy_split
    metric = MetricSpec("precision", "predictive_equality", ThresholdTarget("fpr_at", 0.1), min_support=5)
    return BuiltinEvaluator(tr, va, metric, fractions=[1 / 9, 1 / 3, 1.0], data_seed=0, **kw)


def test_zero_epoch_logreg_is_constant_model(toy_split):
    ev = make_evaluator(toy_split)
    cfg = Configuration(0, {"undersampling": "none", "model": "logreg", "learning_rate": 0.1,
                            "l2_penalty": 0.0, "epochs": 0, "class_weighting": "none"})
    assert np.allclose(ev.fit(cfg, 1.0, 4)(ev.validation.X), 0.5)
    # All scores tie, so the flagged rows are the calibrated random draw itself:
    # every negative gets flagged with equal chance, and precision is TP / flagged.
    res = ev(EvaluationRequest(cfg, 1.0, seed=4))
    va = ev.validation
    flagged = res.rule.apply(np.full(len(va), 0.5))
    assert np.sum(flagged & (va.labels == 0)) == math.floor(0.1 * np.sum(va.labels == 0))
    assert res.accuracy == pytest.approx(np.sum(flagged & (va.labels == 1)) / flagged.sum())


@pytest.mark.parametrize("model, params", [
    ("logreg", {"learning_rate": 0.5, "l2_penalty": 0.0, "epochs": 200, "class_weighting": "none"}),
    ("tree", {"max_depth": 3, "min_samples_leaf": 1, "split_criterion": "gini"}),
])
@pytest.mark.parametrize("target", [0.0, 0.05, 0.3])
def test_separable_data_recall_one(model, params, target):
    rng = np.random.default_rng(0)
    n = 400
    y = np.array([0, 1] * (n // 2))
    X = np.column_stack([y * 4.0 + rng.uniform(-1, 1, n), rng.normal(size=n)])
    tr, va, _ = split(from_arrays(X, y, np.where(rng.random(n) < 0.5, "a", "b")), (0.6, 0.2, 0.2), seed=1)
    metric = MetricSpec("recall", "equal_opportunity", ThresholdTarget("fpr_at", target), min_support=1)
    ev = BuiltinEvaluator(tr, va, metric)
    cfg = Configuration(0, {"undersampling": "none", "model": model, **params})
    assert ev(EvaluationRequest(cfg, 1.0, seed=0)).accuracy == 1.0


def test_builtin_is_deterministic(toy_split, space):
    ev = make_evaluator(toy_split)
    rng = np.random.default_rng(0)
    for i in range(10):
        cfg = sample(space, rng, i)
        req = EvaluationRequest(cfg, 1 / 3, seed=i)
        a, b = ev(req), ev(req)
        assert (a.accuracy, a.fairness, a.rule) == (b.accuracy, b.fairness, b.rule)


def test_builtin_trains_only_on_requested_slice(toy_split, space):
    log = []
    ev = make_evaluator(toy_split, access_log=log)
    rng = np.random.default_rng(1)
    for i in range(20):
        cfg = sample(space, rng, i)
        budget = [1 / 9, 1 / 3, 1.0][i % 3]
        ev(EvaluationRequest(cfg, budget, seed=i))
    for cid, budget, rows in log:
        level = None
        for lv, (data, plan) in ev._prepared.items():
            allowed = set(data.row_ids[plan.rows(budget)])
            if set(rows) <= allowed and len(rows) == len(allowed):
                level = lv
        assert level is not None


def test_builtin_rejects_unknown_model(toy_split):
    ev = make_evaluator(toy_split)
    with pytest.raises(EvaluationError):
        ev(EvaluationRequest(Configuration(0, {"model": "svm"}), 1.0, 0))


def test_test_evaluation_uses_validation_threshold(toy_split):
    ev = make_evaluator(toy_split)
    _, _, te = toy_split
    cfg = Configuration(0, {"undersampling": "none", "model": "tree", "max_depth": 3, "min_samples_leaf": 5,
                            "split_criterion": "gini"})
    val, test = ev.evaluate_on_test(cfg, 0, te.seal())
    assert test.rule == val.rule


# Synthetic surface


def test_synthetic_full_budget_is_noise_free(synth_space):
    surface = SurfaceSpec.random(synth_space, seed=0, noise=0.2)
    cfg = sample(synth_space, np.random.default_rng(0))
    res = evaluate_synthetic(EvaluationRequest(cfg, 1.0, seed=123), surface)
    assert (res.accuracy, res.fairness) == surface.base(cfg.assignments)


def test_synthetic_noise_scale_non_increasing(synth_space):
    surface = SurfaceSpec.random(synth_space, seed=0, noise=0.2)
    budgets = np.linspace(0.01, 1.0, 50)
    scales = [surface.noise_scale(b) for b in budgets]
    assert all(a >= b for a, b in zip(scales, scales[1:]))
    assert scales[-1] == 0.0


def test_synthetic_dimension_mismatch(synth_space):
    surface = SurfaceSpec.random(synth_space, seed=0)
    with pytest.raises(EvaluationError):
        evaluate_synthetic(EvaluationRequest(Configuration(0, {"model": "a", "w": 1.0}), 1.0, 0), surface)


def test_synthetic_rank_correlation(synth_space):
    surface = SurfaceSpec.random(synth_space, seed=3, noise=0.02)
    rng = np.random.default_rng(0)
    cfgs = [sample(synth_space, rng, i) for i in range(100)]

    def goal(c, b):
        r = evaluate_synthetic(EvaluationRequest(c, b, seed=c.id), surface)
        return 0.5 * r.accuracy + 0.5 * r.fairness

    rho = spearmanr([goal(c, 0.1) for c in cfgs], [goal(c, 1.0) for c in cfgs]).statistic
    assert rho >= 0.8


# External trainer protocol


def request(budget=0.5):
    return EvaluationRequest(Configuration(3, {"model": "lr", "lr": np.float64(0.1)}), budget, seed=11)


def test_wire_request_format():
    import json

    line = encode_request(request())
    assert line.endswith("\n") and line.count("\n") == 1
    assert json.loads(line) == {"config": {"model": "lr", "lr": 0.1}, "budget": 0.5, "seed": 11, "phase": "train_eval"}


def test_echo_loopback():
    with ExternalEvaluator(ECHO + ["echo"]) as ev:
        for _ in range(3):  # the same process serves sequential requests
            res = evaluate_external(request(), ev)
            assert (res.accuracy, res.fairness) == (0.5, 0.5)


def test_request_fields_reach_trainer():
    with ExternalEvaluator(ECHO + ["budget"]) as ev:
        res = ev(request(0.25))
    assert (res.accuracy, res.fairness) == (0.25, 0.75)


def test_missing_field_names_it():
    with ExternalEvaluator(ECHO + ["missing"]) as ev:
        with pytest.raises(ProtocolError, match="fairness"):
            ev(request())


def test_malformed_and_error_responses():
    with ExternalEvaluator(ECHO + ["garbage"]) as ev:
        with pytest.raises(ProtocolError, match="malformed"):
            ev(request())
    with ExternalEvaluator(ECHO + ["error"]) as ev:
        with pytest.raises(EvaluationError, match="cannot train"):
            ev(request())


def test_trainer_exit_mid_request():
    with ExternalEvaluator(ECHO + ["die"]) as ev:
        with pytest.raises(EvaluationError, match="exit code 3"):
            ev(request())


def test_trainer_timeout():
    with ExternalEvaluator(ECHO + ["sleep"], timeout=0.5) as ev:
        with pytest.raises(EvaluationError, match="timed out"):
            ev(request())


def test_out_of_range_metric():
    from fairhpo.evaluators.external import decode_response

    with pytest.raises(ProtocolError, match="outside"):
        decode_response('{"accuracy": 1.5, "fairness": 0.2}')
