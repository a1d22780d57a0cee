"""Train built-in models on nested slices and score them on validation data."""
from __future__ import annotations

import threading
import time
import warnings
from typing import Sequence

import numpy as np

from .. import metrics
from ..datakit import UNDERSAMPLING, Dataset, DataWarning, nested_slices, undersample
from ..seeding import derive_seed
from .base import EvaluationError, EvaluationRequest, EvaluationResult, MetricSpec
from .trainers import TRAINERS, Scorer


def score_metrics(scores, labels, groups, metric: MetricSpec, rule):
    data = metrics.LabeledScores(scores, labels, groups)
    acc = metrics.accuracy_metric(data, rule, metric.accuracy)
    conf = metrics.confusion_by_group(data, rule)
    fair = metrics.FAIRNESS_METRICS[metric.fairness](conf, metric.min_support)
    return acc, fair


class BuiltinEvaluator:
    """Evaluate ``logreg``/``tree`` configurations on a fixed train/validation pair.

    The training set is undersampled once per undersampling level (seeded by
    ``data_seed``) and each undersampled set gets its own nested slice plan
    over ``fractions``. Pass ``access_log=[]`` to record, per evaluation, the
    training row ids that were touched.
    """

    def __init__(
        self,
        train: Dataset,
        validation: Dataset,
        metric: MetricSpec,
        fractions: Sequence[float] = (1.0,),
        data_seed: int = 0,
        selector: str = "model",
        undersampling_param: str = "undersampling",
        access_log: list | None = None,
    ):
        self.validation = validation
        self.metric = metric
        self.selector = selector
        self.undersampling_param = undersampling_param
        self.access_log = access_log
        self._lock = threading.Lock()
        fractions = sorted(set(float(f) for f in fractions) | {1.0})
        self._prepared = {}
        self.notes: list[str] = []  # data warnings raised while preparing slices
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", DataWarning)
            for level in UNDERSAMPLING:
                data = undersample(train, level, derive_seed(data_seed, "undersample"))
                plan = nested_slices(data, fractions, derive_seed(data_seed, "slices"))
                self._prepared[level] = (data, plan)
        self.notes = [str(w.message) for w in caught]

    def training_rows(self, config, budget: float) -> Dataset:
        level = str(config.assignments.get(self.undersampling_param, "none"))
        if level not in self._prepared:
            raise EvaluationError(f"unknown undersampling level {level!r}")
        data, plan = self._prepared[level]
        try:
            rows = plan.rows(budget)
        except KeyError as exc:
            raise EvaluationError(str(exc)) from None
        return data.take(rows)

    def fit(self, config, budget: float, seed: int) -> Scorer:
        model = config.assignments.get(self.selector)
        if model not in TRAINERS:
            raise EvaluationError(f"no built-in trainer for {self.selector}={model!r}")
        part = self.training_rows(config, budget)
        if self.access_log is not None:
            with self._lock:
                self.access_log.append((config.id, budget, part.row_ids.copy()))
        return TRAINERS[model](part.X, part.labels, config.assignments, seed)

    def __call__(self, request: EvaluationRequest) -> EvaluationResult:
        start = time.perf_counter()
        metric = request.metric or self.metric
        scorer = self.fit(request.config, request.budget, request.seed)
        scores = scorer(self.validation.X)
        if not np.all(np.isfinite(scores)):
            raise EvaluationError("model produced non-finite scores")
        data = metrics.LabeledScores(scores, self.validation.y, self.validation.groups)
        rule = metrics.calibrate_threshold(data, metric.target, np.random.default_rng(request.seed))
        acc, fair = score_metrics(scores, self.validation.y, self.validation.groups, metric, rule)
        return EvaluationResult(acc, fair, rule, time.perf_counter() - start)

    def evaluate_on_test(self, config, seed: int, test: Dataset, budget: float = 1.0):
        """Fit at ``budget``, calibrate on validation, then score ``test``.

        Returns ``(validation_result, test_result)``. ``test`` may be sealed;
        its labels are read only after the threshold is fixed.
        """
        val = self(EvaluationRequest(config, budget, seed, self.metric))
        scorer = self.fit(config, budget, seed)
        test_scores = scorer(test.X)
        opened = test.unseal()
        acc, fair = score_metrics(test_scores, opened.y, opened.groups, self.metric, val.rule)
        return val, EvaluationResult(acc, fair, val.rule)


def evaluate_builtin(request: EvaluationRequest, evaluator: BuiltinEvaluator) -> EvaluationResult:
    return evaluator(request)
