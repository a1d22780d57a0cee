"""Tree-structured Parzen estimator suggestions over hierarchical spaces.

Trials are split at the ``gamma`` quantile of the scalarized goal. For every
parameter a density is fitted on the good trials (``l``) and on the rest
(``g``); branch parameters only see trials where their branch was active.
Candidates are drawn from ``l`` and the one with the largest ``l/g`` wins.

Numeric densities live on the parameter's unit sampling scale: a uniform
prior component plus one truncated Gaussian per observation, with bandwidth
``max(0.1, distance to the nearest other observation)``. Categorical densities
are Laplace-smoothed counts.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr, ndtri

from ..searchspace import Configuration, ParamSpec, SearchSpace, sample

GAMMA = 0.25
N_CANDIDATES = 24
N_WARMUP = 10
MIN_BANDWIDTH = 0.1


class _Categorical:
    def __init__(self, spec: ParamSpec, values):
        counts = np.array([sum(v == c for v in values) for c in spec.categories], dtype=float)
        self.spec = spec
        self.p = (counts + 1.0) / (counts.sum() + len(counts))

    def draw(self, rng):
        return self.spec.categories[int(rng.choice(len(self.p), p=self.p))]

    def log_pdf(self, value) -> float:
        return math.log(self.p[self.spec.categories.index(value)])


class _Parzen:
    def __init__(self, spec: ParamSpec, values):
        self.spec = spec
        mu = np.array([spec.to_unit(v) for v in values], dtype=float)
        if len(mu) > 1:
            gaps = np.abs(mu[:, None] - mu[None, :])
            np.fill_diagonal(gaps, np.inf)
            sigma = np.maximum(MIN_BANDWIDTH, gaps.min(axis=1))
        else:
            sigma = np.full(len(mu), MIN_BANDWIDTH)
        self.mu, self.sigma = mu, sigma
        self.lo = ndtr((0.0 - mu) / sigma)
        self.mass = ndtr((1.0 - mu) / sigma) - self.lo
        self.weight = 1.0 / (len(mu) + 1)  # each observation and the uniform prior

    def draw_unit(self, rng) -> float:
        k = int(rng.integers(len(self.mu) + 1))
        if k == len(self.mu):
            return float(rng.random())
        q = self.lo[k] + rng.random() * self.mass[k]
        u = self.mu[k] + self.sigma[k] * float(ndtri(q))
        return min(max(u, 0.0), 1.0)

    def log_pdf_unit(self, u: float) -> float:
        z = (u - self.mu) / self.sigma
        comp = np.exp(-0.5 * z * z) / (math.sqrt(2 * math.pi) * self.sigma * self.mass)
        return math.log(self.weight * (1.0 + comp.sum()))


def _fit(spec, values):
    return _Categorical(spec, values) if spec.kind == "categorical" else _Parzen(spec, values)


def _split(history, gamma):
    ranked = sorted(history, key=lambda t: (-t.goal, -t.budget, t.config.id))
    n_good = max(1, math.ceil(gamma * len(ranked)))
    return [t.config.assignments for t in ranked[:n_good]], [t.config.assignments for t in ranked[n_good:]]


def tpe_suggest(
    history,
    space: SearchSpace,
    gamma: float = GAMMA,
    n_candidates: int = N_CANDIDATES,
    rng: np.random.Generator | None = None,
    n_warmup: int = N_WARMUP,
    config_id: int = 0,
) -> Configuration:
    """Suggest the next configuration given the evaluated ``history``.

    Until ``n_warmup`` successful trials exist this is plain uniform sampling
    with the same generator, so it matches ``searchspace.sample`` draw for draw.
    """
    rng = rng if rng is not None else np.random.default_rng()
    ok = [t for t in history if t.ok]
    if len(ok) < max(n_warmup, 1):
        return sample(space, rng, config_id)
    good, bad = _split(ok, gamma)

    def models(spec, active):
        l = _fit(spec, [a[spec.name] for a in good if active(a)])
        g = _fit(spec, [a[spec.name] for a in bad if active(a)])
        return l, g

    always = lambda a: True  # noqa: E731
    root = [(p, *models(p, always)) for p in space.root_params]
    sel_l, sel_g = models(space.selector, always)
    branch_models = {}

    best, best_score = None, -math.inf
    for _ in range(n_candidates):
        values, score = {}, 0.0
        for spec, l, g in root:
            v, s = _draw_scored(spec, l, g, rng)
            values[spec.name] = v
            score += s
        branch = sel_l.draw(rng)
        values[space.selector.name] = branch
        score += sel_l.log_pdf(branch) - sel_g.log_pdf(branch)
        if branch not in branch_models:
            in_branch = lambda a, b=branch: a.get(space.selector.name) == b  # noqa: E731
            branch_models[branch] = [(p, *models(p, in_branch)) for p in space.branch_params(branch)]
        for spec, l, g in branch_models[branch]:
            v, s = _draw_scored(spec, l, g, rng)
            values[spec.name] = v
            score += s
        if score > best_score:
            best, best_score = values, score
    return Configuration(config_id, best)


def _draw_scored(spec, l, g, rng):
    if spec.kind == "categorical":
        v = l.draw(rng)
        return v, l.log_pdf(v) - g.log_pdf(v)
    u = l.draw_unit(rng)
    v = spec.from_unit(u)
    u = spec.to_unit(v)  # score the value actually returned
    return v, l.log_pdf_unit(u) - g.log_pdf_unit(u)
