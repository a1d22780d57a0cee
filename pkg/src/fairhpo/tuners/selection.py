from __future__ import annotations

import math
from dataclasses import dataclass

from ..metrics import TradeoffPoint, dynamic_alpha, scalarize
from ..searchspace import Configuration
from .records import AlphaPolicy, TrialRecord, TunerError


@dataclass(frozen=True)
class Selection:
    config: Configuration
    alpha: float
    trial: TrialRecord

    def __iter__(self):
        # Unpacks as (config, selection_alpha).
        return iter((self.config, self.alpha))


def selection_alpha(trials, policy: AlphaPolicy) -> float:
    ok = [t for t in trials if t.ok]
    if not ok:
        raise TunerError("no successful trials to select from")
    if policy.mode == "static":
        return policy.value
    mean_f = math.fsum(t.fairness for t in ok) / len(ok)
    mean_a = math.fsum(t.accuracy for t in ok) / len(ok)
    return dynamic_alpha(mean_f, mean_a)


def select_model(trials, alpha_policy: AlphaPolicy | float) -> Selection:
    """Pick the trial maximising the scalarized goal under the selection weight.

    With an auto policy the weight comes from the mean fairness and accuracy
    over every successful trial. Ties go to the larger budget, then the
    smaller trial id.
    """
    policy = alpha_policy if isinstance(alpha_policy, AlphaPolicy) else AlphaPolicy.static(alpha_policy)
    alpha = selection_alpha(trials, policy)
    ok = [t for t in trials if t.ok]
    best = min(
        ok,
        key=lambda t: (-scalarize(TradeoffPoint(t.accuracy, t.fairness), alpha), -t.budget, t.trial_id),
    )
    return Selection(best.config, alpha, best)
