"""Group fairness and accuracy metrics, scalarization and Pareto utilities.

Everything here is a pure function of its arguments; randomness only enters
through an explicit generator (threshold tie-breaking).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable, Mapping, Sequence

import numpy as np


class MetricWarning(UserWarning):
    """Emitted for degenerate but recoverable metric situations."""


@dataclass(frozen=True)
class LabeledScores:
    scores: np.ndarray
    labels: np.ndarray
    groups: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=float)
        y = np.asarray(self.labels).astype(int)
        g = np.asarray(self.groups)
        if not (len(s) == len(y) == len(g)):
            raise ValueError(f"length mismatch: scores={len(s)} labels={len(y)} groups={len(g)}")
        if len(s) == 0:
            raise ValueError("empty input")
        if not np.isin(y, (0, 1)).all():
            raise ValueError("labels must be 0/1")
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "groups", g)

    def __len__(self):
        return len(self.scores)


@dataclass(frozen=True)
class ThresholdTarget:
    mode: str
    value: float

    def __post_init__(self):
        if self.mode in ("fpr_at", "recall_at"):
            if not 0.0 <= self.value <= 1.0:
                raise ValueError(f"{self.mode} rate must lie in [0, 1], got {self.value}")
        elif self.mode == "top_k":
            if self.value < 1 or int(self.value) != self.value:
                raise ValueError(f"top_k needs a positive integer K, got {self.value}")
        else:
            raise ValueError(f"unknown threshold mode {self.mode!r}")


@dataclass(frozen=True)
class DecisionRule:
    """Score threshold plus a seeded policy for rows tied at the threshold.

    Rows scoring above ``threshold`` are flagged. Of the rows scoring exactly
    ``threshold``, a fraction ``tie_fraction`` is flagged, chosen by a
    permutation drawn from ``tie_seed``.
    """

    threshold: float
    tie_fraction: float
    tie_seed: int

    def apply(self, scores) -> np.ndarray:
        scores = np.asarray(scores, dtype=float)
        pred = scores > self.threshold
        tied = np.flatnonzero(scores == self.threshold)
        if len(tied):
            m = int(round(self.tie_fraction * len(tied)))
            perm = np.random.default_rng(self.tie_seed).permutation(len(tied))
            pred[tied[perm[:m]]] = True
        return pred


def _floor(x: float) -> int:
    return math.floor(round(x, 9))


def _ceil(x: float) -> int:
    return math.ceil(round(x, 9))


def calibrate_threshold(data: LabeledScores, target: ThresholdTarget, rng: np.random.Generator) -> DecisionRule:
    """Find a rule that realises ``target`` exactly on ``data``.

    fpr_at flags exactly floor(value * n_neg) negatives, recall_at exactly
    ceil(value * n_pos) positives, top_k exactly K rows. Ties at the boundary
    score are broken by a seeded random permutation.
    """
    scores, labels = data.scores, data.labels
    if target.mode == "fpr_at":
        counted = labels == 0
        if not counted.any():
            raise ValueError("fpr_at calibration needs at least one negative")
        k = _floor(target.value * counted.sum())
    elif target.mode == "recall_at":
        counted = labels == 1
        if not counted.any():
            raise ValueError("recall_at calibration needs at least one positive")
        k = _ceil(target.value * counted.sum())
    else:
        counted = np.ones(len(scores), dtype=bool)
        k = int(target.value)
        if k > len(scores):
            warnings.warn(f"top_k K={k} exceeds dataset size {len(scores)}; clamped", MetricWarning, stacklevel=2)
            k = len(scores)

    tie_seed = int(rng.integers(2**63 - 1))
    c_scores = np.sort(scores[counted])[::-1]
    if k == 0:
        # Admit nothing from the counted class: cut at its top score and admit
        # only the tied rows the permutation places before the first counted one.
        threshold = float(c_scores[0])
        need = 0
    else:
        threshold = float(c_scores[k - 1])
        need = k - int(np.sum(c_scores > threshold))

    tied = np.flatnonzero(scores == threshold)
    perm = np.random.default_rng(tie_seed).permutation(len(tied))
    counted_in_order = counted[tied[perm]]
    if need == 0:
        first = np.flatnonzero(counted_in_order)
        m = int(first[0]) if len(first) else len(tied)
    else:
        m = int(np.flatnonzero(counted_in_order)[need - 1]) + 1
    return DecisionRule(threshold, m / len(tied), tie_seed)


@dataclass(frozen=True)
class Confusion:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def negatives(self) -> int:
        return self.fp + self.tn

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "Confusion") -> "Confusion":
        return Confusion(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)


def _confusion(y: np.ndarray, pred: np.ndarray) -> Confusion:
    return Confusion(
        tp=int(np.sum(pred & (y == 1))),
        fp=int(np.sum(pred & (y == 0))),
        tn=int(np.sum(~pred & (y == 0))),
        fn=int(np.sum(~pred & (y == 1))),
    )


def confusion_by_group(data: LabeledScores, rule: DecisionRule) -> dict:
    """Per-group confusion counts under ``rule``; keys are the group ids."""
    pred = rule.apply(data.scores)
    out = {}
    for g in np.unique(data.groups):
        mask = data.groups == g
        out[g.item() if hasattr(g, "item") else g] = _confusion(data.labels[mask], pred[mask])
    return out


def global_confusion(confusion: Mapping) -> Confusion:
    total = Confusion()
    for c in confusion.values():
        total = total + c
    return total


def _rate_ratio(rates: list[float]) -> float:
    if len(rates) == 1:
        return 1.0
    hi = max(rates)
    if hi == 0:
        return 1.0
    return min(rates) / hi


def predictive_equality(confusion: Mapping, min_support: int = 10) -> float:
    """Ratio of the smallest to the largest group false positive rate.

    Groups with fewer than ``min_support`` negatives are ignored.
    """
    rates = [c.fp / c.negatives for c in confusion.values() if c.negatives >= max(min_support, 1)]
    if not rates:
        raise ValueError(f"no group has at least {min_support} negatives")
    return _rate_ratio(rates)


def equal_opportunity(confusion: Mapping, min_support: int = 10) -> float:
    """Ratio of the smallest to the largest group true positive rate."""
    rates = [c.tp / c.positives for c in confusion.values() if c.positives >= max(min_support, 1)]
    if not rates:
        raise ValueError(f"no group has at least {min_support} positives")
    return _rate_ratio(rates)


FAIRNESS_METRICS = {
    "predictive_equality": predictive_equality,
    "equal_opportunity": equal_opportunity,
}


def accuracy_metric(data: LabeledScores, rule: DecisionRule, kind: str) -> float:
    pred = rule.apply(data.scores)
    c = _confusion(data.labels, pred)
    if kind == "recall":
        if c.positives == 0:
            raise ValueError("recall undefined: no positive labels")
        return c.tp / c.positives
    if kind == "precision":
        if c.tp + c.fp == 0:
            warnings.warn("precision with zero positive predictions; returning 0", MetricWarning, stacklevel=2)
            return 0.0
        return c.tp / (c.tp + c.fp)
    raise ValueError(f"unknown accuracy metric {kind!r}")


@dataclass(frozen=True)
class TradeoffPoint:
    a: float
    f: float

    def __post_init__(self):
        if not (0.0 <= self.a <= 1.0 and 0.0 <= self.f <= 1.0):
            raise ValueError(f"trade-off point outside [0,1]^2: ({self.a}, {self.f})")


def _check_unit(name, x):
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {x}")


def scalarize(point: TradeoffPoint, alpha: float) -> float:
    """Weighted sum ``alpha * a + (1 - alpha) * f``."""
    _check_unit("alpha", alpha)
    return alpha * point.a + (1.0 - alpha) * point.f


def dynamic_alpha(mean_f: float, mean_a: float) -> float:
    """Accuracy weight that leans toward whichever objective is lagging.

    Equal means give 0.5; high fairness with low accuracy pushes the weight
    toward accuracy and vice versa.
    """
    _check_unit("mean_f", mean_f)
    _check_unit("mean_a", mean_a)
    # Computed on the shortest decimal form of each input so that decimal
    # inputs give decimal-exact weights, e.g. (0.3, 0.7) -> 0.3.
    delta = Decimal(repr(float(mean_f))) - Decimal(repr(float(mean_a)))
    return float(delta / 2 + Decimal("0.5"))


def _as_xy(points) -> np.ndarray:
    arr = np.array([(p.a, p.f) if isinstance(p, TradeoffPoint) else tuple(p) for p in points], dtype=float)
    return arr.reshape(-1, 2)


def pareto_mask(points) -> np.ndarray:
    """Boolean mask of the points no other point strictly dominates.

    Sort by accuracy descending (fairness descending within ties) and sweep,
    tracking the best fairness seen among strictly larger accuracies.
    """
    xy = _as_xy(points)
    if len(xy) == 0:
        raise ValueError("pareto frontier of an empty set")
    a, f = xy[:, 0], xy[:, 1]
    order = np.lexsort((-f, -a))
    mask = np.zeros(len(xy), dtype=bool)
    best_f_higher_a = -np.inf  # best f among points with strictly larger a
    i = 0
    while i < len(order):
        j = i
        while j < len(order) and a[order[j]] == a[order[i]]:
            j += 1
        group = order[i:j]
        top_f = f[group[0]]
        for idx in group:
            # Same-a points dominate when their f is strictly larger.
            dominated = f[idx] < top_f or f[idx] <= best_f_higher_a
            mask[idx] = not dominated
        best_f_higher_a = max(best_f_higher_a, top_f)
        i = j
    return mask


def pareto_frontier(points: Sequence) -> list:
    """The non-dominated subset of ``points`` in input order; duplicates kept."""
    mask = pareto_mask(points)
    return [p for p, keep in zip(points, mask) if keep]


def _kolmogorov_sf(lam: float) -> float:
    """P(K > lam) for the limiting Kolmogorov distribution."""
    if lam <= 0:
        return 1.0
    if lam < 1.0:
        # Dual series converges quickly for small arguments.
        total = 0.0
        for k in range(1, 101):
            term = math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8 * lam**2))
            total += term
            if term < 1e-10:
                break
        return min(1.0, max(0.0, 1.0 - math.sqrt(2 * math.pi) / lam * total))
    total = 0.0
    for k in range(1, 101):
        term = math.exp(-2 * k * k * lam * lam)
        total += (-1) ** (k - 1) * term
        if term < 1e-10:
            break
    return min(1.0, max(0.0, 2.0 * total))


def ks_statistic(sample1, sample2) -> float:
    x = np.sort(np.asarray(sample1, dtype=float))
    y = np.sort(np.asarray(sample2, dtype=float))
    if len(x) == 0 or len(y) == 0:
        raise ValueError("KS test needs two non-empty samples")
    grid = np.concatenate([x, y])
    n, m = len(x), len(y)
    # Integer ECDF gap scaled by n*m, divided once: D is correctly rounded.
    gap = np.abs(np.searchsorted(x, grid, side="right") * m - np.searchsorted(y, grid, side="right") * n)
    return int(gap.max()) / (n * m)


def ks_test(sample1: Iterable[float], sample2: Iterable[float]) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov test with the asymptotic p-value."""
    sample1, sample2 = list(sample1), list(sample2)
    d = ks_statistic(sample1, sample2)
    n, m = len(sample1), len(sample2)
    ne = n * m / (n + m)
    return d, _kolmogorov_sf(math.sqrt(ne) * d)
