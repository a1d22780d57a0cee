from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

from ..metrics import TradeoffPoint, scalarize
from ..searchspace import Configuration


class TunerError(ValueError):
    """Invalid tuner arguments (bad schedule inputs, unsupported alpha policy)."""


class TrialFailed(RuntimeError):
    """An evaluation failed in a tuner that does not tolerate failures."""

    def __init__(self, config: Configuration, cause: Exception):
        super().__init__(f"evaluation of configuration {config.id} {config.assignments} failed: {cause}")
        self.config = config
        self.cause = cause


@dataclass(frozen=True)
class AlphaPolicy:
    mode: str = "static"
    value: float | None = 0.5

    def __post_init__(self):
        if self.mode == "static":
            if self.value is None or not 0.0 <= self.value <= 1.0:
                raise TunerError(f"static alpha needs a value in [0, 1], got {self.value}")
        elif self.mode == "auto":
            if self.value is not None:
                raise TunerError("auto alpha carries no value")
        else:
            raise TunerError(f"unknown alpha mode {self.mode!r}")

    @classmethod
    def static(cls, value: float) -> "AlphaPolicy":
        return cls("static", float(value))

    @classmethod
    def auto(cls) -> "AlphaPolicy":
        return cls("auto", None)


@dataclass(frozen=True)
class TrialRecord:
    """One evaluation of one configuration at one budget.

    ``accuracy``, ``fairness`` and ``goal`` are None for failed evaluations.
    ``bracket`` and ``rung`` are -1 outside Hyperband.
    """

    trial_id: int
    config: Configuration
    budget: float
    accuracy: float | None
    fairness: float | None
    alpha_used: float
    goal: float | None
    bracket: int = -1
    rung: int = -1
    seed: int = 0
    wall_time: float = 0.0
    policy: str = "static"
    status: str = "ok"
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def rank_goal(self) -> float:
        return self.goal if self.ok else -math.inf

    @property
    def point(self) -> TradeoffPoint:
        return TradeoffPoint(self.accuracy, self.fairness)

    @classmethod
    def evaluated(cls, trial_id, config, budget, accuracy, fairness, alpha, **kw) -> "TrialRecord":
        goal = scalarize(TradeoffPoint(accuracy, fairness), alpha)
        return cls(trial_id, config, budget, accuracy, fairness, alpha, goal, **kw)

    @classmethod
    def failed(cls, trial_id, config, budget, alpha, error, **kw) -> "TrialRecord":
        return cls(trial_id, config, budget, None, None, alpha, None, status="failed", error=str(error), **kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["config"] = self.config.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, allow_nan=False)

    @classmethod
    def from_dict(cls, d) -> "TrialRecord":
        d = dict(d)
        d["config"] = Configuration.from_dict(d["config"])
        return cls(**d)
