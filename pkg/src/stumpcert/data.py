"""Dataset ingestion: CSV loading, categorical encoding, normalization, splits.

Rows with missing or unparsable values are dropped (the count is kept on the
returned datasets).  Normalization statistics always come from the train
portion only.  Splits are deterministic: head-fraction keeps file order,
k-fold uses contiguous index blocks.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

MISSING_TOKENS = {"", "?", "na", "nan", "n/a", "null"}


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class SplitSpec:
    kind: str  # "head_fraction" | "head_count" | "kfold"
    fraction: float = 0.8
    count: int = 0  # exact train-row count for head_count
    k: int = 5
    fold: int = 0

    def __post_init__(self):
        if self.kind == "head_fraction":
            if not 0.0 < self.fraction < 1.0:
                raise DataError(f"split fraction must be in (0, 1), got {self.fraction}")
        elif self.kind == "head_count":
            if self.count < 1:
                raise DataError(f"train row count must be >= 1, got {self.count}")
        elif self.kind == "kfold":
            if self.k < 2:
                raise DataError(f"k must be >= 2, got {self.k}")
            if not 0 <= self.fold < self.k:
                raise DataError(f"fold index {self.fold} outside [0, {self.k})")
        else:
            raise DataError(f"unknown split kind {self.kind!r}")


@dataclass(frozen=True)
class DatasetSpec:
    path: str
    label_column: str
    categorical_columns: dict = field(default_factory=dict)  # name -> cardinality
    normalization: str = "minmax"  # "minmax" | "standardize" | "none"
    split: SplitSpec = field(default_factory=lambda: SplitSpec("head_fraction", fraction=0.8))

    def __post_init__(self):
        if self.normalization not in ("minmax", "standardize", "none"):
            raise DataError(f"unknown normalization {self.normalization!r}")

    @classmethod
    def from_dict(cls, doc: dict, base_dir: str | None = None) -> "DatasetSpec":
        split_doc = doc.get("split", {"kind": "head_fraction", "fraction": 0.8})
        split = SplitSpec(
            split_doc["kind"],
            fraction=float(split_doc.get("fraction", 0.8)),
            count=int(split_doc.get("count", 0)),
            k=int(split_doc.get("k", 5)),
            fold=int(split_doc.get("fold", 0)),
        )
        path = doc["path"]
        if base_dir and not path.startswith("/"):
            import os.path

            path = os.path.join(base_dir, path)
        return cls(
            path=path,
            label_column=doc["label_column"],
            categorical_columns={k: int(v) for k, v in doc.get("categorical_columns", {}).items()},
            normalization=doc.get("normalization", "minmax"),
            split=split,
        )

    @classmethod
    def from_file(cls, path) -> "DatasetSpec":
        import os.path

        with open(path) as fh:
            return cls.from_dict(json.load(fh), base_dir=os.path.dirname(str(path)))


@dataclass(frozen=True)
class Dataset:
    """Immutable numerical + categorical matrix pair with labels and weights."""

    numerical: np.ndarray  # float64 (n, d_num)
    categorical: np.ndarray  # int64 (n, d_cat)
    labels: np.ndarray  # int64 in {0, 1}
    weights: np.ndarray  # nonnegative, sums to 1
    numerical_names: tuple = ()
    categorical_names: tuple = ()
    categories: tuple = ()  # per categorical column: tuple of value labels
    n_rejected: int = 0

    def __post_init__(self):
        n = len(self.labels)
        for name in ("numerical", "categorical", "labels", "weights"):
            a = getattr(self, name)
            a = np.ascontiguousarray(a)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.numerical.shape[0] != n or self.categorical.shape[0] != n:
            raise DataError("feature matrices and labels disagree on sample count")
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise DataError("labels must be 0 or 1")
        if np.any(self.weights < 0) or abs(float(self.weights.sum()) - 1.0) > 1e-9:
            raise DataError("sample weights must be nonnegative and sum to 1")

    @property
    def n_samples(self) -> int:
        return len(self.labels)

    @property
    def n_numerical(self) -> int:
        return self.numerical.shape[1]

    @property
    def n_categorical(self) -> int:
        return self.categorical.shape[1]

    def with_weights(self, w: np.ndarray) -> "Dataset":
        return replace(self, weights=np.asarray(w, dtype=np.float64))


def make_dataset(numerical, labels, categorical=None, weights=None, **kw) -> Dataset:
    """Convenience constructor with uniform weights and empty categorical part."""
    numerical = np.asarray(numerical, dtype=np.float64)
    if numerical.ndim == 1:
        numerical = numerical[:, None]
    labels = np.asarray(labels, dtype=np.int64)
    n = len(labels)
    if categorical is None:
        categorical = np.empty((n, 0), dtype=np.int64)
    if weights is None:
        weights = np.full(n, 1.0 / n)
    return Dataset(numerical, np.asarray(categorical, dtype=np.int64), labels,
                   np.asarray(weights, dtype=np.float64), **kw)


def _parse_rows(spec: DatasetSpec):
    with open(spec.path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{spec.path}: empty file (a header row is required)")
        rows = list(reader)
    header = [h.strip() for h in header]
    if spec.label_column not in header:
        raise DataError(f"label column {spec.label_column!r} not in header {header}")
    for name in spec.categorical_columns:
        if name not in header:
            raise DataError(f"categorical column {name!r} not in header")
    return header, rows


def load_and_split(spec: DatasetSpec) -> tuple[Dataset, Dataset]:
    """Parse, reject incomplete rows, split, then normalize with train statistics."""
    header, rows = _parse_rows(spec)
    label_idx = header.index(spec.label_column)
    cat_idx = {name: header.index(name) for name in spec.categorical_columns}
    num_names = [
        h for i, h in enumerate(header) if i != label_idx and h not in spec.categorical_columns
    ]
    num_idx = [header.index(h) for h in num_names]
    cat_names = list(spec.categorical_columns)

    categories: list[list[str]] = [[] for _ in cat_names]
    cat_maps: list[dict] = [{} for _ in cat_names]
    numerical, categorical, labels = [], [], []
    n_rejected = 0
    for row in rows:
        if len(row) != len(header):
            n_rejected += 1
            continue
        cells = [c.strip() for c in row]
        if any(c.lower() in MISSING_TOKENS for c in cells):
            n_rejected += 1
            continue
        try:
            nums = [float(cells[i]) for i in num_idx]
        except ValueError:
            n_rejected += 1
            continue
        if any(not math.isfinite(v) for v in nums):
            n_rejected += 1
            continue
        label_text = cells[label_idx]
        if label_text not in ("0", "1"):
            raise DataError(
                f"{spec.path}: label {label_text!r} is not in {{0, 1}}"
            )
        cats = []
        for j, name in enumerate(cat_names):
            value = cells[cat_idx[name]]
            code = cat_maps[j].get(value)
            if code is None:
                code = len(categories[j])
                if code >= spec.categorical_columns[name]:
                    raise DataError(
                        f"{spec.path}: column {name!r} exceeds declared cardinality "
                        f"{spec.categorical_columns[name]} with value {value!r}"
                    )
                cat_maps[j][value] = code
                categories[j].append(value)
            cats.append(code)
        numerical.append(nums)
        categorical.append(cats)
        labels.append(int(label_text))

    if not labels:
        raise DataError(f"{spec.path}: no usable rows")
    numerical = np.asarray(numerical, dtype=np.float64).reshape(len(labels), len(num_idx))
    categorical = np.asarray(categorical, dtype=np.int64).reshape(len(labels), len(cat_names))
    labels = np.asarray(labels, dtype=np.int64)

    train_rows, test_rows = _split_indices(len(labels), spec.split)
    stats = _normalization_stats(numerical[train_rows], spec.normalization)

    def build(idx: np.ndarray) -> Dataset:
        n = len(idx)
        return Dataset(
            _apply_normalization(numerical[idx], stats, spec.normalization),
            categorical[idx],
            labels[idx],
            np.full(n, 1.0 / n),
            numerical_names=tuple(num_names),
            categorical_names=tuple(cat_names),
            categories=tuple(tuple(c) for c in categories),
            n_rejected=n_rejected,
        )

    return build(train_rows), build(test_rows)


def _split_indices(n: int, split: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(n)
    if split.kind == "head_fraction":
        cut = int(n * split.fraction)
        return idx[:cut], idx[cut:]
    if split.kind == "head_count":
        if split.count >= n:
            raise DataError(f"train row count {split.count} leaves no test rows (n={n})")
        return idx[: split.count], idx[split.count:]
    sizes = [n // split.k + (1 if i < n % split.k else 0) for i in range(split.k)]
    bounds = np.concatenate(([0], np.cumsum(sizes)))
    test = idx[bounds[split.fold]:bounds[split.fold + 1]]
    train = np.concatenate((idx[: bounds[split.fold]], idx[bounds[split.fold + 1]:]))
    return train, test


def _normalization_stats(train_numerical: np.ndarray, kind: str):
    if kind == "none":
        d = train_numerical.shape[1]
        return np.zeros(d), np.ones(d)
    if kind == "minmax":
        lo = train_numerical.min(axis=0)
        hi = train_numerical.max(axis=0)
        span = hi - lo
        span[span == 0.0] = 1.0  # constant column: map to 0, no division blow-up
        return lo, span
    mean = train_numerical.mean(axis=0)
    std = train_numerical.std(axis=0)
    std[std == 0.0] = 1.0
    return mean, std


def _apply_normalization(x: np.ndarray, stats, kind: str) -> np.ndarray:
    center, span = stats
    return (x - center) / span


def class_balance(data: Dataset) -> dict:
    """Per-class counts, frequencies, and weight sums."""
    out = {}
    n = data.n_samples
    for c in (0, 1):
        mask = data.labels == c
        out[c] = {
            "count": int(mask.sum()),
            "frequency": float(mask.sum() / n) if n else 0.0,
            "weight": float(data.weights[mask].sum()),
        }
    return out
