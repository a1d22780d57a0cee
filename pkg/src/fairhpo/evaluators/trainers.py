"""Logistic regression and CART-style decision trees written against numpy."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
from scipy.special import expit

from .base import EvaluationError

Scorer = Callable[[np.ndarray], np.ndarray]


def logistic_loss_grad(params, X, y, l2, sample_weight=None):
    """Weighted mean log-loss plus ``0.5 * l2 * ||w||^2`` and its gradient.

    ``params`` is ``[w_1 .. w_d, b]``; the intercept is not penalised.
    """
    w, b = params[:-1], params[-1]
    z = X @ w + b
    sw = np.ones(len(y)) if sample_weight is None else sample_weight
    total = sw.sum()
    # log(1 + e^z) - y z, computed without overflow
    losses = np.logaddexp(0.0, z) - y * z
    loss = float(sw @ losses) / total + 0.5 * l2 * float(w @ w)
    resid = sw * (expit(z) - y) / total
    grad = np.empty_like(params)
    grad[:-1] = X.T @ resid + l2 * w
    grad[-1] = resid.sum()
    return loss, grad


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    bias: float
    mean: np.ndarray
    scale: np.ndarray

    def __call__(self, X) -> np.ndarray:
        Z = (np.asarray(X, dtype=float) - self.mean) / self.scale
        return expit(Z @ self.weights + self.bias)


def train_logreg(X, y, hyperparams: Mapping, seed: int = 0) -> LogisticModel:
    """Full-batch gradient descent from zero weights on standardised features.

    ``seed`` is accepted for interface symmetry; the fit is deterministic.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (y == 1).any() or not (y == 0).any():
        raise EvaluationError("logistic regression needs at least one row of each class")
    lr = float(hyperparams.get("learning_rate", 0.1))
    l2 = float(hyperparams.get("l2_penalty", 0.0))
    epochs = int(hyperparams.get("epochs", 100))
    weighting = hyperparams.get("class_weighting", "none")

    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Z = (X - mean) / scale
    sw = None
    if weighting == "balanced":
        n_pos = y.sum()
        sw = np.where(y == 1, len(y) / (2 * n_pos), len(y) / (2 * (len(y) - n_pos)))
    elif weighting != "none":
        raise EvaluationError(f"unknown class_weighting {weighting!r}")

    params = np.zeros(X.shape[1] + 1)
    # Overflow shows up as a non-finite loss and is reported as divergence.
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(epochs):
            loss, grad = logistic_loss_grad(params, Z, y, l2, sw)
            if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
                raise EvaluationError(f"logistic regression diverged (loss={loss})")
            params -= lr * grad
        loss, _ = logistic_loss_grad(params, Z, y, l2, sw)
    if not np.isfinite(loss):
        raise EvaluationError(f"logistic regression diverged (loss={loss})")
    return LogisticModel(params[:-1].copy(), float(params[-1]), mean, scale)


def _impurity(pos, n, criterion):
    p = np.divide(pos, n, out=np.zeros_like(pos, dtype=float), where=n > 0)
    if criterion == "gini":
        return 2.0 * p * (1.0 - p)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(p * np.log2(p) + (1 - p) * np.log2(1 - p))
    return np.nan_to_num(h)


@dataclass(frozen=True)
class TreeModel:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=int)
        while True:
            feat = self.feature[node]
            inner = feat >= 0
            if not inner.any():
                return self.value[node]
            rows = np.flatnonzero(inner)
            go_left = X[rows, feat[rows]] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))


def _best_split(X, y, idx, min_leaf, criterion, feature_order):
    n = len(idx)
    parent = _impurity(np.array([y[idx].sum()], dtype=float), np.array([n], dtype=float), criterion)[0]
    best = None  # (gain, feature, threshold)
    for j in feature_order:
        xs = X[idx, j]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        ys = y[idx][order]
        left_n = np.arange(1, n, dtype=float)
        left_pos = np.cumsum(ys)[:-1].astype(float)
        valid = (xs[1:] > xs[:-1]) & (left_n >= min_leaf) & (n - left_n >= min_leaf)
        if not valid.any():
            continue
        right_n = n - left_n
        right_pos = ys.sum() - left_pos
        child = (left_n * _impurity(left_pos, left_n, criterion) + right_n * _impurity(right_pos, right_n, criterion)) / n
        gain = np.where(valid, parent - child, -np.inf)
        k = int(np.argmax(gain))
        if best is None or gain[k] > best[0] + 1e-12:
            best = (gain[k], j, 0.5 * (xs[k] + xs[k + 1]))
    return best


def train_tree(X, y, hyperparams: Mapping, seed: int = 0) -> TreeModel:
    """Greedy binary tree; leaves score the Laplace-smoothed positive share.

    An impure node is split whenever some split respects ``min_samples_leaf``,
    even at zero impurity decrease (needed for XOR-like interactions). Ties
    between features are broken by a seeded feature permutation.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if len(y) == 0:
        raise EvaluationError("decision tree needs at least one row")
    max_depth = int(hyperparams.get("max_depth", 5))
    min_leaf = max(1, int(hyperparams.get("min_samples_leaf", 1)))
    criterion = hyperparams.get("split_criterion", "gini")
    if criterion not in ("gini", "entropy"):
        raise EvaluationError(f"unknown split_criterion {criterion!r}")
    feature_order = np.random.default_rng(seed).permutation(X.shape[1])

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append((y[idx].sum() + 1.0) / (len(idx) + 2.0))
        return len(feature) - 1

    root = new_node(np.arange(len(y)))
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        pos = y[idx].sum()
        if depth >= max_depth or pos == 0 or pos == len(idx) or len(idx) < 2 * min_leaf:
            continue
        split = _best_split(X, y, idx, min_leaf, criterion, feature_order)
        if split is None:
            continue
        _, j, t = split
        mask = X[idx, j] <= t
        li, ri = idx[mask], idx[~mask]
        feature[node], threshold[node] = int(j), float(t)
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))
    return TreeModel(
        np.asarray(feature), np.asarray(threshold), np.asarray(left), np.asarray(right), np.asarray(value)
    )


TRAINERS = {"logreg": train_logreg, "tree": train_tree}
