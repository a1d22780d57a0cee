"""Tabular data ingestion, stratified splits, nested budget slices and undersampling."""
from __future__ import annotations

import bisect
import csv
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


class DataError(ValueError):
    pass


class DataWarning(UserWarning):
    pass


class LabelAccessError(RuntimeError):
    """Labels of a sealed dataset were read before final evaluation."""


@dataclass(frozen=True)
class Schema:
    label: str
    sensitive: str
    categorical: tuple[str, ...] = ()
    features: tuple[str, ...] | None = None  # None: every other column
    positive_label: str | None = None  # None: label column must already be 0/1
    sensitive_bins: tuple[float, ...] = ()  # numeric sensitive column -> interval groups

    @classmethod
    def from_dict(cls, d: Mapping) -> "Schema":
        try:
            return cls(
                label=d["label"],
                sensitive=d["sensitive"],
                categorical=tuple(d.get("categorical", ())),
                features=tuple(d["features"]) if d.get("features") is not None else None,
                positive_label=None if d.get("positive_label") is None else str(d["positive_label"]),
                sensitive_bins=tuple(float(b) for b in d.get("sensitive_bins", ())),
            )
        except KeyError as exc:
            raise DataError(f"schema: missing {exc.args[0]!r}") from None


@dataclass(frozen=True)
class Encoding:
    """Column-wise preprocessing fitted on one dataset and reusable on others."""

    numeric: tuple[str, ...]
    medians: tuple[float, ...]
    categorical: tuple[str, ...]
    levels: tuple[tuple[str, ...], ...]

    @classmethod
    def fit(cls, numeric_names, numeric, categorical_names, categorical) -> "Encoding":
        medians = []
        for j in range(numeric.shape[1]):
            col = numeric[:, j]
            ok = col[~np.isnan(col)]
            medians.append(float(np.median(ok)) if len(ok) else 0.0)
        levels = tuple(tuple(sorted(set(categorical[:, j]))) for j in range(categorical.shape[1]))
        return cls(tuple(numeric_names), tuple(medians), tuple(categorical_names), levels)

    @property
    def feature_names(self) -> list[str]:
        names = list(self.numeric)
        for col, lv in zip(self.categorical, self.levels):
            names += [f"{col}={v}" for v in lv]
        return names

    def transform(self, numeric, categorical) -> np.ndarray:
        num = numeric.copy()
        for j, med in enumerate(self.medians):
            col = num[:, j]
            col[np.isnan(col)] = med
        blocks = [num]
        for j, lv in enumerate(self.levels):
            onehot = categorical[:, j][:, None] == np.asarray(lv, dtype=object)[None, :]
            blocks.append(onehot.astype(float))
        return np.hstack(blocks) if blocks else np.zeros((len(numeric), 0))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Encoded features, binary labels and sensitive groups.

    ``row_ids`` index rows of the originally loaded file and survive every
    split, slice and resample, which makes containment checks straightforward.
    The raw columns are kept so that encodings can be refitted on a split.
    """

    X: np.ndarray
    labels: np.ndarray = field(repr=False)
    groups: np.ndarray
    row_ids: np.ndarray
    feature_names: tuple[str, ...]
    raw_numeric: np.ndarray = field(repr=False)
    raw_categorical: np.ndarray = field(repr=False)
    encoding: Encoding = field(repr=False)
    sealed: bool = False

    @property
    def y(self) -> np.ndarray:
        if self.sealed:
            raise LabelAccessError("labels of a sealed dataset are not readable before final evaluation")
        return self.labels

    def __len__(self):
        return len(self.row_ids)

    @property
    def prevalence(self) -> float:
        return float(self.labels.mean())

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return replace(
            self,
            X=self.X[idx],
            labels=self.labels[idx],
            groups=self.groups[idx],
            row_ids=self.row_ids[idx],
            raw_numeric=self.raw_numeric[idx],
            raw_categorical=self.raw_categorical[idx],
        )

    def with_encoding(self, encoding: Encoding) -> "Dataset":
        return replace(
            self,
            X=encoding.transform(self.raw_numeric, self.raw_categorical),
            feature_names=tuple(encoding.feature_names),
            encoding=encoding,
        )

    def refit_encoding(self) -> Encoding:
        return Encoding.fit(self.encoding.numeric, self.raw_numeric, self.encoding.categorical, self.raw_categorical)

    def seal(self) -> "Dataset":
        return replace(self, sealed=True)

    def unseal(self) -> "Dataset":
        return replace(self, sealed=False)


def _bin_label(value: float, edges: Sequence[float]) -> str:
    i = bisect.bisect_right(edges, value)
    lo = "-inf" if i == 0 else f"{edges[i - 1]:g}"
    hi = "inf" if i == len(edges) else f"{edges[i]:g}"
    return f"[{lo},{hi})"


def load_csv(path, schema: Schema | Mapping) -> Dataset:
    """Read a headed CSV file into a :class:`Dataset`.

    Numeric features get median imputation, categorical features one-hot
    columns (missing values become their own ``missing`` level).
    """
    if not isinstance(schema, Schema):
        schema = Schema.from_dict(schema)
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = [(reader.line_num, r) for r in reader if r]

    header = [h.strip() for h in header]
    for col in (schema.label, schema.sensitive, *schema.categorical, *(schema.features or ())):
        if col not in header:
            raise DataError(f"{path}: missing column {col!r}")
    feature_cols = list(schema.features) if schema.features is not None else [
        h for h in header if h not in (schema.label, schema.sensitive)
    ]
    cat_cols = [c for c in feature_cols if c in schema.categorical]
    num_cols = [c for c in feature_cols if c not in schema.categorical]
    pos = {h: i for i, h in enumerate(header)}

    labels, groups = [], []
    numeric = np.empty((len(rows), len(num_cols)))
    categorical = np.empty((len(rows), len(cat_cols)), dtype=object)
    for r, (line, row) in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
        raw_label = row[pos[schema.label]].strip()
        if schema.positive_label is not None:
            labels.append(1 if raw_label == schema.positive_label else 0)
        elif raw_label in ("0", "1"):
            labels.append(int(raw_label))
        else:
            raise DataError(f"{path}:{line}: non-binary label {raw_label!r}")
        sens = row[pos[schema.sensitive]].strip()
        if schema.sensitive_bins:
            try:
                sens = _bin_label(float(sens), schema.sensitive_bins)
            except ValueError:
                raise DataError(f"{path}:{line}: cannot bin sensitive value {sens!r}") from None
        groups.append(sens)
        for j, c in enumerate(num_cols):
            v = row[pos[c]].strip()
            if v == "" or v.upper() in ("NA", "NAN", "?"):
                numeric[r, j] = np.nan
                continue
            try:
                numeric[r, j] = float(v)
            except ValueError:
                raise DataError(f"{path}:{line}: column {c!r} is not numeric: {v!r}") from None
        for j, c in enumerate(cat_cols):
            v = row[pos[c]].strip()
            categorical[r, j] = v if v not in ("", "?") else "missing"

    if not rows:
        raise DataError(f"{path}: no data rows")
    encoding = Encoding.fit(num_cols, numeric, cat_cols, categorical)
    return Dataset(
        X=encoding.transform(numeric, categorical),
        labels=np.asarray(labels, dtype=int),
        groups=np.asarray(groups, dtype=object),
        row_ids=np.arange(len(rows)),
        feature_names=tuple(encoding.feature_names),
        raw_numeric=numeric,
        raw_categorical=categorical,
        encoding=encoding,
    )


def from_arrays(X, y, groups, feature_names=None) -> Dataset:
    """Wrap in-memory numeric arrays as a :class:`Dataset`."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    names = list(feature_names) if feature_names is not None else [f"x{j}" for j in range(X.shape[1])]
    cat = np.empty((len(X), 0), dtype=object)
    encoding = Encoding.fit(names, X, [], cat)
    return Dataset(
        X=X.copy(),
        labels=np.asarray(y, dtype=int),
        groups=np.asarray(groups, dtype=object),
        row_ids=np.arange(len(X)),
        feature_names=tuple(names),
        raw_numeric=X.copy(),
        raw_categorical=cat,
        encoding=encoding,
    )


def _allocate(n: int, fractions: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment of ``n`` items over ``fractions``."""
    raw = [n * f for f in fractions]
    counts = [math.floor(x) for x in raw]
    rest = n - sum(counts)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[:rest]:
        counts[i] += 1
    return counts


def split(data: Dataset, fractions: Sequence[float], seed: int) -> tuple[Dataset, Dataset, Dataset]:
    """Stratified train/validation/test partition over (label, group) cells.

    Part sizes match the largest-remainder apportionment of the whole set;
    each (label, group) cell is split as close to proportionally as that allows.
    The encoding is refitted on the training part and applied to all three.
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or min(fractions) <= 0 or not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        raise DataError(f"split fractions must be three positive numbers summing to 1, got {fractions}")
    rng = np.random.default_rng(seed)
    cells = {}
    for i, key in enumerate(zip(data.labels.tolist(), data.groups.tolist())):
        cells.setdefault(key, []).append(i)
    keys = sorted(cells, key=repr)
    small = [k for k in keys if len(cells[k]) < 3]
    if small:
        warnings.warn(f"cells {small} too small to stratify; allocated proportionally", DataWarning, stacklevel=2)

    # Floor per cell, then hand out the leftovers by largest fractional part
    # without exceeding either the cell's size or the part's global target.
    targets = _allocate(len(data), fractions)
    counts = {k: [math.floor(len(cells[k]) * f) for f in fractions] for k in keys}
    left = {k: len(cells[k]) - sum(counts[k]) for k in keys}
    need = [t - sum(counts[k][p] for k in keys) for p, t in enumerate(targets)]
    pairs = sorted(
        ((k, p) for k in keys for p in range(3)),
        key=lambda kp: (-(len(cells[kp[0]]) * fractions[kp[1]] % 1), keys.index(kp[0]), kp[1]),
    )
    for final_pass in (False, True):
        for k, p in pairs:
            while left[k] and need[p] and (final_pass or counts[k][p] == math.floor(len(cells[k]) * fractions[p])):
                counts[k][p] += 1
                left[k] -= 1
                need[p] -= 1
                if not final_pass:
                    break

    parts: list[list[int]] = [[], [], []]
    for k in keys:
        idx = np.asarray(cells[k])
        idx = idx[rng.permutation(len(idx))]
        start = 0
        for p, c in enumerate(counts[k]):
            parts[p].extend(idx[start:start + c].tolist())
            start += c
    out = [data.take(np.sort(np.asarray(p, dtype=int))) for p in parts]
    encoding = out[0].refit_encoding()
    return tuple(d.with_encoding(encoding) for d in out)


@dataclass(frozen=True)
class SlicePlan:
    """Nested stratified subsets of one training set.

    ``assignments[j]`` is the index of the smallest slice containing row ``j``
    of the training set (``len(fractions)`` when no slice contains it).
    """

    fractions: tuple[float, ...]
    assignments: np.ndarray

    def index_of(self, fraction: float) -> int:
        for i, f in enumerate(self.fractions):
            if math.isclose(f, fraction, rel_tol=1e-9, abs_tol=1e-12):
                return i
        raise KeyError(f"no slice at fraction {fraction}; available {self.fractions}")

    def rows(self, fraction: float) -> np.ndarray:
        """Positions (into the training set) of the rows in the slice at ``fraction``."""
        return np.flatnonzero(self.assignments <= self.index_of(fraction))


def nested_slices(train: Dataset, fractions: Sequence[float], seed: int) -> SlicePlan:
    """Nested, class-stratified slices: every slice contains all smaller ones."""
    fractions = tuple(float(f) for f in fractions)
    if not fractions or any(b <= a for a, b in zip(fractions, fractions[1:])):
        raise DataError(f"slice fractions must be strictly ascending, got {fractions}")
    if fractions[0] <= 0 or fractions[-1] > 1:
        raise DataError("slice fractions must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    assignments = np.full(len(train), len(fractions), dtype=int)
    for cls in (0, 1):
        idx = np.flatnonzero(train.labels == cls)
        if not len(idx):
            continue
        idx = idx[rng.permutation(len(idx))]
        prev = 0
        for s, f in enumerate(fractions):
            take = int(round(f * len(idx)))
            if take == 0:
                warnings.warn(f"slice {f} would hold no rows of class {cls}; keeping one", DataWarning, stacklevel=2)
                take = 1
            take = max(take, prev)
            assignments[idx[prev:take]] = s
            prev = take
    return SlicePlan(fractions, assignments)


UNDERSAMPLING = ("0.20", "0.10", "0.05", "none")


def undersample(train: Dataset, target_prevalence, seed: int) -> Dataset:
    """Drop random negatives until the positive share reaches ``target_prevalence``.

    ``None`` or ``"none"`` returns the input. Positives are never removed.
    """
    if target_prevalence is None or target_prevalence == "none":
        return train
    target = float(target_prevalence)
    if not 0 < target < 1:
        raise DataError(f"target prevalence must lie in (0, 1), got {target}")
    pos = np.flatnonzero(train.labels == 1)
    neg = np.flatnonzero(train.labels == 0)
    if len(pos) == 0 or train.prevalence >= target:
        warnings.warn(
            f"prevalence {train.prevalence:.4f} already at or above target {target}; unchanged",
            DataWarning,
            stacklevel=2,
        )
        return train
    keep_neg = int(round(len(pos) * (1 - target) / target))
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(neg, size=min(keep_neg, len(neg)), replace=False))
    return train.take(np.sort(np.concatenate([pos, chosen])))
