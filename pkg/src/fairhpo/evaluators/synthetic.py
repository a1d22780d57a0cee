"""A cheap, seeded accuracy/fairness response surface for exercising tuners.

Each numeric parameter contributes a Gaussian bump (on its unit sampling
scale) to accuracy and another to fairness; categorical parameters contribute
per-category offsets. Low-budget evaluations add Gaussian noise whose scale
shrinks linearly to zero at full budget, so rankings at low fidelity are
noisy but informative.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..searchspace import SearchSpace
from .base import EvaluationError, EvaluationRequest, EvaluationResult


@dataclass(frozen=True)
class Bump:
    center: float
    width: float
    height: float

    def __call__(self, u: float) -> float:
        return self.height * math.exp(-0.5 * ((u - self.center) / self.width) ** 2)


@dataclass(frozen=True)
class SurfaceSpec:
    space: SearchSpace
    accuracy: Mapping[str, object] = field(default_factory=dict)  # Bump or {category: offset}
    fairness: Mapping[str, object] = field(default_factory=dict)
    base_accuracy: float = 0.3
    base_fairness: float = 0.3
    noise: float = 0.02
    accuracy_shift: float = 0.0  # accuracy lost at budget -> 0
    seed: int = 0

    def __post_init__(self):
        if self.noise < 0 or self.accuracy_shift < 0:
            raise ValueError("noise and accuracy_shift must be non-negative")

    def noise_scale(self, budget: float) -> float:
        return self.noise * (1.0 - budget)

    @classmethod
    def random(cls, space: SearchSpace, seed: int, noise: float = 0.02, accuracy_shift: float = 0.0) -> "SurfaceSpec":
        """Draw bumps so that accuracy and fairness peak in different places."""
        rng = np.random.default_rng(seed)
        acc, fair = {}, {}
        for name, p in space.all_params().items():
            if p.is_numeric:
                c = float(rng.uniform(0.1, 0.9))
                acc[name] = Bump(c, float(rng.uniform(0.15, 0.35)), float(rng.uniform(0.1, 0.25)))
                fair[name] = Bump(1.0 - c, float(rng.uniform(0.15, 0.35)), float(rng.uniform(0.1, 0.25)))
            else:
                acc[name] = {v: float(rng.uniform(0, 0.15)) for v in p.categories}
                fair[name] = {v: float(rng.uniform(0, 0.15)) for v in p.categories}
        return cls(space, acc, fair, noise=noise, accuracy_shift=accuracy_shift, seed=seed)

    def _response(self, table, assignments):
        params = self.space.all_params()
        total = 0.0
        for name, value in assignments.items():
            if name not in params:
                raise EvaluationError(f"parameter {name!r} is not a dimension of this surface")
            shape = table.get(name)
            if shape is None:
                continue
            if isinstance(shape, Bump):
                total += shape(params[name].to_unit(value))
            else:
                total += shape.get(value, 0.0)
        return total

    def base(self, assignments) -> tuple[float, float]:
        a = self.base_accuracy + self._response(self.accuracy, assignments)
        f = self.base_fairness + self._response(self.fairness, assignments)
        return min(max(a, 0.0), 1.0), min(max(f, 0.0), 1.0)


def evaluate_synthetic(request: EvaluationRequest, surface: SurfaceSpec) -> EvaluationResult:
    start = time.perf_counter()
    a, f = surface.base(request.config.assignments)
    sigma = surface.noise_scale(request.budget)
    a -= surface.accuracy_shift * (1.0 - request.budget)
    if sigma > 0:
        rng = np.random.default_rng([surface.seed, request.seed & 0xFFFFFFFF, request.seed >> 32, round(request.budget * 1e9)])
        da, df = rng.normal(0.0, sigma, size=2)
        a, f = a + da, f + df
    a, f = min(max(a, 0.0), 1.0), min(max(f, 0.0), 1.0)
    return EvaluationResult(a, f, None, time.perf_counter() - start)


class SyntheticEvaluator:
    def __init__(self, surface: SurfaceSpec):
        self.surface = surface

    def __call__(self, request: EvaluationRequest) -> EvaluationResult:
        return evaluate_synthetic(request, self.surface)
