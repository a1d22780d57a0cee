"""Hierarchical hyperparameter spaces.

A space has a set of root parameters that are always active, one categorical
selector (the model type), and a per-selector-value list of conditional
parameters. Spaces are parsed from plain mappings (the ``[space]`` table of an
experiment config) and sampled with an explicit ``numpy.random.Generator``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

KINDS = ("uniform", "log-uniform", "int", "categorical")


class SpaceError(ValueError):
    """Raised for malformed search-space documents.

    ``path`` is the dotted location of the offending field.
    """

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str
    low: float | None = None
    high: float | None = None
    categories: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpaceError(self.name, f"unknown kind {self.kind!r}, expected one of {KINDS}")
        if self.kind == "categorical":
            if not self.categories:
                raise SpaceError(self.name, "category list must be non-empty")
            if len(set(self.categories)) != len(self.categories):
                raise SpaceError(self.name, "category list has duplicate entries")
            return
        if self.low is None or self.high is None:
            raise SpaceError(self.name, "numeric parameter needs low and high")
        if not (math.isfinite(self.low) and math.isfinite(self.high)):
            raise SpaceError(self.name, "bounds must be finite")
        if self.low >= self.high:
            raise SpaceError(self.name, f"inverted bounds: low={self.low} >= high={self.high}")
        if self.kind == "log-uniform" and self.low <= 0:
            raise SpaceError(self.name, "log-uniform lower bound must be > 0")
        if self.kind == "int" and not (float(self.low).is_integer() and float(self.high).is_integer()):
            raise SpaceError(self.name, "int bounds must be integers")

    @property
    def is_numeric(self) -> bool:
        return self.kind != "categorical"

    def to_unit(self, value) -> float:
        """Map a value onto [0, 1] on the parameter's sampling scale."""
        if self.kind == "log-uniform":
            return (math.log(value) - math.log(self.low)) / (math.log(self.high) - math.log(self.low))
        if self.kind == "int":
            # Inclusive integer range occupies [low - 0.5, high + 0.5] on the line.
            return (value - self.low + 0.5) / (self.high - self.low + 1)
        return (value - self.low) / (self.high - self.low)

    def from_unit(self, u: float):
        if self.kind == "log-uniform":
            v = math.exp(math.log(self.low) + u * (math.log(self.high) - math.log(self.low)))
            return min(max(v, self.low), self.high)
        if self.kind == "int":
            v = math.floor(self.low - 0.5 + u * (self.high - self.low + 1) + 0.5)
            return int(min(max(v, self.low), self.high))
        return min(max(self.low + u * (self.high - self.low), self.low), self.high)

    def draw(self, rng: np.random.Generator):
        if self.kind == "categorical":
            return self.categories[int(rng.integers(len(self.categories)))]
        if self.kind == "int":
            return int(rng.integers(int(self.low), int(self.high) + 1))
        return self.from_unit(float(rng.random()))

    def check(self, value) -> str | None:
        """Return a violation message, or None if ``value`` is admissible."""
        if self.kind == "categorical":
            if value not in self.categories:
                return f"{self.name}: {value!r} is not one of {list(self.categories)}"
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
            return f"{self.name}: expected a number, got {value!r}"
        if self.kind == "int" and not float(value).is_integer():
            return f"{self.name}: expected an integer, got {value!r}"
        if not self.low <= value <= self.high:
            return f"{self.name}: {value!r} outside [{self.low}, {self.high}]"
        return None


@dataclass(frozen=True)
class SearchSpace:
    root_params: tuple[ParamSpec, ...]
    selector: ParamSpec
    conditional: Mapping[str, tuple[ParamSpec, ...]]

    def __post_init__(self):
        if self.selector.kind != "categorical":
            raise SpaceError(f"selector.{self.selector.name}", "selector must be categorical")
        missing = [c for c in self.selector.categories if c not in self.conditional]
        if missing:
            raise SpaceError("branches", f"no subspace entry for selector values {missing}")
        extra = [c for c in self.conditional if c not in self.selector.categories]
        if extra:
            raise SpaceError("branches", f"subspaces for unknown selector values {extra}")
        root_names = [p.name for p in self.root_params] + [self.selector.name]
        _check_unique(root_names, "params")
        for branch, params in self.conditional.items():
            names = root_names + [p.name for p in params]
            _check_unique(names, f"branches.{branch}")

    @property
    def selector_name(self) -> str:
        return self.selector.name

    def active_params(self, branch: str) -> tuple[ParamSpec, ...]:
        return self.root_params + (self.selector,) + tuple(self.conditional[branch])

    def all_params(self) -> dict[str, ParamSpec]:
        out = {p.name: p for p in self.root_params}
        out[self.selector.name] = self.selector
        for params in self.conditional.values():
            for p in params:
                out.setdefault(p.name, p)
        return out

    def branch_params(self, branch: str) -> tuple[ParamSpec, ...]:
        return tuple(self.conditional[branch])


def _check_unique(names, path):
    seen = set()
    for n in names:
        if n in seen:
            raise SpaceError(path, f"duplicate parameter name {n!r}")
        seen.add(n)


@dataclass(frozen=True)
class Configuration:
    id: int
    assignments: dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, name):
        return self.assignments[name]

    def to_dict(self) -> dict:
        return {"id": self.id, "assignments": dict(self.assignments)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Configuration":
        return cls(int(d["id"]), dict(d["assignments"]))


def _parse_param(name: str, doc: Any, path: str) -> ParamSpec:
    if not isinstance(doc, Mapping):
        raise SpaceError(path, "parameter entry must be a table")
    kind = doc.get("kind")
    if kind is None:
        raise SpaceError(f"{path}.kind", "missing")
    if kind == "categorical":
        cats = doc.get("values", doc.get("categories"))
        if not isinstance(cats, (list, tuple)):
            raise SpaceError(f"{path}.values", "categorical parameter needs a list of values")
        if not cats:
            raise SpaceError(f"{path}.values", "category list must be non-empty")
        if len(set(map(str, cats))) != len(cats):
            raise SpaceError(f"{path}.values", "category list has duplicate entries")
        return ParamSpec(name, "categorical", categories=tuple(str(c) for c in cats))
    if kind not in KINDS:
        raise SpaceError(f"{path}.kind", f"unknown kind {kind!r}")
    for key in ("low", "high"):
        if key not in doc:
            raise SpaceError(f"{path}.{key}", "missing")
        if isinstance(doc[key], bool) or not isinstance(doc[key], (int, float)):
            raise SpaceError(f"{path}.{key}", f"expected a number, got {doc[key]!r}")
    try:
        return ParamSpec(name, kind, float(doc["low"]), float(doc["high"]))
    except SpaceError as exc:
        raise SpaceError(path, exc.message) from None


def parse_space(document: Mapping) -> SearchSpace:
    """Build a :class:`SearchSpace` from a parsed ``[space]`` table.

    Expected layout::

        [space.params.undersampling]
        kind = "categorical"
        values = ["0.20", "0.10", "0.05", "none"]

        [space.selector]
        name = "model"
        values = ["logreg", "tree"]

        [space.branches.logreg.learning_rate]
        kind = "log-uniform"
        low = 1e-3
        high = 1.0

    Errors carry the dotted path of the offending field.
    """
    if not isinstance(document, Mapping):
        raise SpaceError("space", "document must be a table")
    params_doc = document.get("params", {})
    if not isinstance(params_doc, Mapping):
        raise SpaceError("params", "must be a table")
    root = tuple(_parse_param(n, d, f"params.{n}") for n, d in params_doc.items())

    sel_doc = document.get("selector")
    if not isinstance(sel_doc, Mapping):
        raise SpaceError("selector", "missing selector table")
    sel_name = sel_doc.get("name", "model")
    selector = _parse_param(sel_name, {"kind": "categorical", "values": sel_doc.get("values")}, "selector")

    branches_doc = document.get("branches", {})
    if not isinstance(branches_doc, Mapping):
        raise SpaceError("branches", "must be a table")
    conditional = {}
    for branch in selector.categories:
        bdoc = branches_doc.get(branch, {})
        if not isinstance(bdoc, Mapping):
            raise SpaceError(f"branches.{branch}", "must be a table")
        conditional[branch] = tuple(
            _parse_param(n, d, f"branches.{branch}.{n}") for n, d in bdoc.items()
        )
    for branch in branches_doc:
        if branch not in selector.categories:
            raise SpaceError(f"branches.{branch}", "not a selector value")
    return SearchSpace(root, selector, conditional)


def sample(space: SearchSpace, rng: np.random.Generator, config_id: int = 0) -> Configuration:
    """Draw a configuration: root params, then the selector, then its branch."""
    values = {}
    for p in space.root_params:
        values[p.name] = p.draw(rng)
    branch = space.selector.draw(rng)
    values[space.selector.name] = branch
    for p in space.conditional[branch]:
        values[p.name] = p.draw(rng)
    return Configuration(config_id, values)


def validate(space: SearchSpace, config: Configuration) -> list[str]:
    """List every way ``config`` fails to be a point of ``space``."""
    violations = []
    a = config.assignments
    for p in space.root_params:
        if p.name not in a:
            violations.append(f"{p.name}: missing")
        elif (msg := p.check(a[p.name])) is not None:
            violations.append(msg)
    sel = space.selector
    if sel.name not in a:
        violations.append(f"{sel.name}: missing selector")
        branch = None
    else:
        msg = sel.check(a[sel.name])
        branch = None if msg else a[sel.name]
        if msg:
            violations.append(msg)
    known = {p.name for p in space.root_params} | {sel.name}
    if branch is not None:
        for p in space.conditional[branch]:
            known.add(p.name)
            if p.name not in a:
                violations.append(f"{p.name}: missing (active under {sel.name}={branch})")
            elif (msg := p.check(a[p.name])) is not None:
                violations.append(msg)
    for name in a:
        if name not in known:
            violations.append(f"{name}: not active in this configuration")
    return violations
