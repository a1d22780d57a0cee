from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

from ..metrics import DecisionRule, ThresholdTarget
from ..searchspace import Configuration


class EvaluationError(RuntimeError):
    """A single evaluation failed; the tuner decides whether that is fatal."""


@dataclass(frozen=True)
class MetricSpec:
    accuracy: str = "precision"
    fairness: str = "predictive_equality"
    target: ThresholdTarget = ThresholdTarget("fpr_at", 0.1)
    min_support: int = 10

    def __post_init__(self):
        if self.accuracy not in ("precision", "recall"):
            raise ValueError(f"unknown accuracy metric {self.accuracy!r}")
        if self.fairness not in ("predictive_equality", "equal_opportunity"):
            raise ValueError(f"unknown fairness metric {self.fairness!r}")

    @classmethod
    def from_dict(cls, d: Mapping) -> "MetricSpec":
        value = d.get("threshold_value", 0.1)
        mode = d.get("threshold_mode", "fpr_at")
        return cls(
            accuracy=d.get("accuracy", "precision"),
            fairness=d.get("fairness", "predictive_equality"),
            target=ThresholdTarget(mode, int(value) if mode == "top_k" else float(value)),
            min_support=int(d.get("min_support", 10)),
        )


@dataclass(frozen=True)
class EvaluationRequest:
    config: Configuration
    budget: float  # fraction of the training set in (0, 1]
    seed: int
    metric: MetricSpec | None = None

    def __post_init__(self):
        if not 0.0 < self.budget <= 1.0:
            raise ValueError(f"budget fraction must lie in (0, 1], got {self.budget}")


@dataclass(frozen=True)
class EvaluationResult:
    accuracy: float
    fairness: float
    rule: DecisionRule | None = None
    wall_time: float = 0.0
    details: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("accuracy", "fairness"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise EvaluationError(f"{name}={v!r} outside [0, 1]")
