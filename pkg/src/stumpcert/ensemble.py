"""Stump ensembles: stumps, per-feature meta-stumps, categorical stumps, trees.

A stump predicts ``gamma_left`` for x[feature] <= threshold and ``gamma_right``
otherwise.  All stumps sharing a feature are merged into one *meta-stump*, a
piecewise-constant function given by sorted split positions and per-region
predictions.  Region predictions are stored on an integer grid: each leaf
gamma is rounded to the nearest multiple of 1/delta (ties up), so a meta-stump
built from M_i stumps has region values in {0, ..., M_i * delta}.

The ensemble output at x is (sum of region values) / (M * delta) in [0, 1] and
the induced classifier predicts 1 iff that value is strictly above 0.5 (ties
go to class 0).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

MODEL_FORMAT = "stump-ensemble"
MODEL_VERSION = 1


class ModelFormatError(ValueError):
    """Raised for malformed or wrong-version model files."""


def leaf_to_grid(gamma: float, delta: int) -> int:
    """Round a leaf prediction in [0, 1] to the nearest grid step, ties up."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"leaf prediction must lie in [0, 1], got {gamma!r}")
    return int(math.floor(gamma * delta + 0.5))


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DecisionStump:
    feature: int
    threshold: float
    gamma_left: float
    gamma_right: float

    def __post_init__(self):
        if not math.isfinite(self.threshold):
            raise ValueError(f"stump threshold must be finite, got {self.threshold!r}")
        for g in (self.gamma_left, self.gamma_right):
            if not 0.0 <= g <= 1.0:
                raise ValueError(f"leaf prediction must lie in [0, 1], got {g!r}")

    def __call__(self, x: float) -> float:
        return self.gamma_right if x > self.threshold else self.gamma_left


@dataclass(frozen=True)
class MetaStump:
    """All stumps of one feature, merged: k thresholds and k+1 region values."""

    feature: int
    thresholds: np.ndarray  # strictly increasing, float64
    gammas: np.ndarray  # int64, len(thresholds) + 1, in {0, ..., stump_count*delta}
    stump_count: int

    def __post_init__(self):
        object.__setattr__(self, "thresholds", _readonly(np.asarray(self.thresholds, dtype=np.float64)))
        object.__setattr__(self, "gammas", _readonly(np.asarray(self.gammas, dtype=np.int64)))
        if self.thresholds.ndim != 1 or self.gammas.ndim != 1:
            raise ValueError("thresholds and gammas must be 1-d")
        if len(self.gammas) != len(self.thresholds) + 1:
            raise ValueError("a meta-stump needs one more region than thresholds")
        if not np.all(np.isfinite(self.thresholds)):
            raise ValueError("thresholds must be finite")
        if len(self.thresholds) > 1 and not np.all(np.diff(self.thresholds) > 0):
            raise ValueError("thresholds must be strictly increasing")
        if self.stump_count < 1:
            raise ValueError("stump_count must be >= 1")

    def validate_grid(self, delta: int) -> None:
        top = self.stump_count * delta
        if self.gammas.min() < 0 or self.gammas.max() > top:
            raise ValueError(
                f"region values of feature {self.feature} outside grid [0, {top}]"
            )

    def region_index(self, x) -> np.ndarray:
        """Region of x: count of thresholds strictly below x (x == v falls left)."""
        return np.searchsorted(self.thresholds, x, side="left")

    def value_at(self, x) -> np.ndarray:
        return self.gammas[self.region_index(x)]


@dataclass(frozen=True)
class CategoricalStump:
    """One grid value per category; counts as a single stump in the normalizer."""

    feature: int
    gammas: np.ndarray  # int64, length = cardinality, values in {0, ..., delta}

    def __post_init__(self):
        object.__setattr__(self, "gammas", _readonly(np.asarray(self.gammas, dtype=np.int64)))
        if self.gammas.ndim != 1 or len(self.gammas) < 1:
            raise ValueError("categorical stump needs at least one category")

    @property
    def cardinality(self) -> int:
        return len(self.gammas)

    @property
    def stump_count(self) -> int:
        return 1

    def validate_grid(self, delta: int) -> None:
        if self.gammas.min() < 0 or self.gammas.max() > delta:
            raise ValueError(
                f"categorical values of feature {self.feature} outside grid [0, {delta}]"
            )


@dataclass(frozen=True)
class TreeRegionStump:
    """A single decision tree as one independent unit over its leaf regions.

    Leaf j is the axis-aligned box {x : lowers[j, i] < x_fi <= uppers[j, i]}
    over the tree's ``features``; its prediction sits on the {0, ..., delta}
    grid.  The tree counts as one stump in the ensemble normalizer.
    """

    features: tuple  # feature indices used by the tree, in first-use order
    lowers: np.ndarray  # float64 (n_leaves, n_features), -inf where unbounded
    uppers: np.ndarray  # float64 (n_leaves, n_features), +inf where unbounded
    gammas: np.ndarray  # int64 (n_leaves,), values in {0, ..., delta}

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(int(f) for f in self.features))
        object.__setattr__(self, "lowers", _readonly(np.asarray(self.lowers, dtype=np.float64)))
        object.__setattr__(self, "uppers", _readonly(np.asarray(self.uppers, dtype=np.float64)))
        object.__setattr__(self, "gammas", _readonly(np.asarray(self.gammas, dtype=np.int64)))
        n_leaves = len(self.gammas)
        shape = (n_leaves, len(self.features))
        if self.lowers.shape != shape or self.uppers.shape != shape:
            raise ValueError("leaf bound arrays must be (n_leaves, n_features)")
        if n_leaves < 1:
            raise ValueError("tree needs at least one leaf")
        if np.any(self.lowers >= self.uppers):
            raise ValueError("every leaf box must have lower < upper bounds")

    @property
    def stump_count(self) -> int:
        return 1

    def validate_grid(self, delta: int) -> None:
        if self.gammas.min() < 0 or self.gammas.max() > delta:
            raise ValueError("tree leaf values outside grid")

    def leaf_index(self, x: np.ndarray) -> int:
        vals = np.asarray([x[f] for f in self.features], dtype=np.float64)
        inside = np.all((self.lowers < vals) & (vals <= self.uppers), axis=1)
        hits = np.nonzero(inside)[0]
        if len(hits) != 1:
            raise ValueError("leaf boxes do not partition the input point")
        return int(hits[0])

    def value_at_single(self, x: np.ndarray) -> int:
        return int(self.gammas[self.leaf_index(x)])


NumericalUnit = Union[MetaStump, TreeRegionStump]


# -- decision trees ----------------------------------------------------------


@dataclass(frozen=True)
class TreeLeaf:
    value: float


@dataclass(frozen=True)
class TreeSplit:
    feature: int
    threshold: float
    left: "TreeNode"  # taken when x[feature] <= threshold
    right: "TreeNode"


TreeNode = Union[TreeLeaf, TreeSplit]


def tree_to_region_stump(tree: TreeNode, delta: int) -> TreeRegionStump:
    """Flatten a decision tree into its leaf boxes with grid predictions."""
    features: list[int] = []
    leaves: list[tuple[dict, dict, float]] = []

    def walk(node: TreeNode, lo: dict, hi: dict) -> None:
        if isinstance(node, TreeLeaf):
            leaves.append((dict(lo), dict(hi), node.value))
            return
        f = node.feature
        if f not in features:
            features.append(f)
        left_hi = dict(hi)
        left_hi[f] = min(hi.get(f, math.inf), node.threshold)
        walk(node.left, lo, left_hi)
        right_lo = dict(lo)
        right_lo[f] = max(lo.get(f, -math.inf), node.threshold)
        walk(node.right, right_lo, hi)

    walk(tree, {}, {})
    n, d = len(leaves), len(features)
    lowers = np.full((n, d), -np.inf)
    uppers = np.full((n, d), np.inf)
    gammas = np.empty(n, dtype=np.int64)
    for j, (lo, hi, value) in enumerate(leaves):
        for i, f in enumerate(features):
            lowers[j, i] = lo.get(f, -math.inf)
            uppers[j, i] = hi.get(f, math.inf)
        gammas[j] = leaf_to_grid(value, delta)
    return TreeRegionStump(tuple(features), lowers, uppers, gammas)


# -- grouping ----------------------------------------------------------------


def group_into_meta_stumps(stumps: Sequence[DecisionStump], delta: int) -> list[MetaStump]:
    """Merge stumps by feature into meta-stumps on the 1/delta grid.

    Leaf predictions are discretized first, then region values are the
    cumulative sums over the stumps sorted by threshold.  Coincident
    thresholds within a feature are merged into a single split (the region
    between two equal thresholds is empty and dropped).
    """
    if delta < 2:
        raise ValueError(f"delta must be >= 2, got {delta}")
    by_feature: dict[int, list[DecisionStump]] = {}
    for s in stumps:
        by_feature.setdefault(s.feature, []).append(s)

    out = []
    for feature, group in by_feature.items():
        group = sorted(group, key=lambda s: s.threshold)
        k = len(group)
        v = np.array([s.threshold for s in group], dtype=np.float64)
        gl = np.array([leaf_to_grid(s.gamma_left, delta) for s in group], dtype=np.int64)
        gr = np.array([leaf_to_grid(s.gamma_right, delta) for s in group], dtype=np.int64)
        # region j: stumps before j answer right, the rest answer left
        regions = np.empty(k + 1, dtype=np.int64)
        regions[0] = gl.sum()
        regions[1:] = regions[0] + np.cumsum(gr - gl)
        if k > 1:
            keep = np.nonzero(np.diff(v) > 0)[0]  # last index of each duplicate run
            v_unique = np.append(v[keep], v[-1])
            regions = np.concatenate(([regions[0]], regions[np.append(keep, k - 1) + 1]))
            v = v_unique
        out.append(MetaStump(feature, v, regions, stump_count=k))
    return out


def meta_stump_to_stumps(ms: MetaStump, delta: int) -> list[DecisionStump]:
    """Reconstruct one stump per threshold whose regrouping reproduces ``ms``.

    Region increments fix gamma_right - gamma_left per stump; the left values
    are any integer grid solution of sum(left_j) = gammas[0] respecting the
    [0, delta] leaf range (greedy fill).  Raises if no such stump set exists,
    which can only happen for hand-built region values.
    """
    k = len(ms.thresholds)
    if k == 0:
        if ms.stump_count != 1:
            raise ValueError("cannot reconstruct a constant multi-stump unit")
        g = int(ms.gammas[0])
        return [DecisionStump(ms.feature, 0.0, g / delta, g / delta)]
    steps = np.diff(ms.gammas)  # gamma_right - gamma_left per sorted stump
    lower = np.maximum(0, -steps)
    upper = np.minimum(delta, delta - steps)
    slack = int(ms.gammas[0]) - int(lower.sum())
    if slack < 0 or slack > int((upper - lower).sum()):
        raise ValueError("region values are not realizable by [0, 1] leaves")
    left = lower.copy()
    for j in range(k):
        add = min(slack, int(upper[j] - lower[j]))
        left[j] += add
        slack -= add
    return [
        DecisionStump(ms.feature, float(ms.thresholds[j]),
                      int(left[j]) / delta, int(left[j] + steps[j]) / delta)
        for j in range(k)
    ]


# -- ensemble ----------------------------------------------------------------


@dataclass(frozen=True)
class StumpEnsemble:
    """Normalized ensemble of meta-stumps, tree units, and categorical stumps.

    Numerical units index columns of the numerical feature matrix; categorical
    stumps index columns of the (separate) categorical matrix.  ``M`` is the
    total stump count used by the 1/(M*delta) normalizer.
    """

    numerical: tuple
    categorical: tuple
    delta: int
    numerical_names: tuple = field(default=())
    categorical_names: tuple = field(default=())
    categories: tuple = field(default=())  # per categorical stump: tuple of labels or ()

    def __post_init__(self):
        object.__setattr__(self, "numerical", tuple(self.numerical))
        object.__setattr__(self, "categorical", tuple(self.categorical))
        if self.delta < 2:
            raise ValueError(f"delta must be >= 2, got {self.delta}")
        if not self.numerical and not self.categorical:
            raise ValueError("ensemble needs at least one stump")
        seen: set[int] = set()
        for unit in self.numerical:
            feats = unit.features if isinstance(unit, TreeRegionStump) else (unit.feature,)
            for f in feats:
                if f in seen:
                    raise ValueError(f"numerical feature {f} used by more than one unit")
                seen.add(f)
            unit.validate_grid(self.delta)
        seen_cat: set[int] = set()
        for stump in self.categorical:
            if stump.feature in seen_cat:
                raise ValueError(f"categorical feature {stump.feature} used twice")
            seen_cat.add(stump.feature)
            stump.validate_grid(self.delta)

    @property
    def M(self) -> int:
        return sum(u.stump_count for u in self.numerical) + len(self.categorical)

    @property
    def m_delta(self) -> int:
        return self.M * self.delta

    def categorical_offset(self, x_cat) -> int:
        """Deterministic grid contribution of the categorical stumps at x_cat."""
        total = 0
        for stump in self.categorical:
            v = int(x_cat[stump.feature])
            if not 0 <= v < stump.cardinality:
                raise ValueError(
                    f"categorical feature {stump.feature} value {v} outside [0, {stump.cardinality})"
                )
            total += int(stump.gammas[v])
        return total

    def numerical_total(self, x_num) -> int:
        total = 0
        x_num = np.asarray(x_num, dtype=np.float64)
        for unit in self.numerical:
            if isinstance(unit, MetaStump):
                total += int(unit.gammas[int(unit.region_index(x_num[unit.feature]))])
            else:
                total += unit.value_at_single(x_num)
        return total

    def predict_clean(self, x_num=None, x_cat=None) -> tuple[float, int]:
        """Ensemble value in [0, 1] and the induced class bit (tie -> 0)."""
        t = 0
        if self.numerical:
            if x_num is None:
                raise ValueError("ensemble has numerical units but x_num is missing")
            t += self.numerical_total(x_num)
        if self.categorical:
            if x_cat is None:
                raise ValueError("ensemble has categorical stumps but x_cat is missing")
            t += self.categorical_offset(x_cat)
        return t / self.m_delta, int(2 * t > self.m_delta)

    def predict_clean_batch(self, x_num=None, x_cat=None) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized predict_clean over rows of x_num / x_cat."""
        n = len(x_num) if x_num is not None else len(x_cat)
        t = np.zeros(n, dtype=np.int64)
        for unit in self.numerical:
            if isinstance(unit, MetaStump):
                t += unit.value_at(np.asarray(x_num)[:, unit.feature])
            else:
                t += np.array([unit.value_at_single(row) for row in np.asarray(x_num)])
        for stump in self.categorical:
            vals = np.asarray(x_cat)[:, stump.feature].astype(np.int64)
            if vals.min(initial=0) < 0 or vals.max(initial=0) >= stump.cardinality:
                raise ValueError(f"categorical feature {stump.feature} value out of range")
            t += stump.gammas[vals]
        return t / self.m_delta, (2 * t > self.m_delta).astype(np.int64)


# -- model files -------------------------------------------------------------


def ensemble_to_dict(ens: StumpEnsemble, metadata: dict | None = None) -> dict:
    features = []
    for i, unit in enumerate(ens.numerical):
        if isinstance(unit, MetaStump):
            rec = {
                "kind": "numerical",
                "feature": unit.feature,
                "thresholds": [float(v) for v in unit.thresholds],
                "gammas": [int(g) for g in unit.gammas],
                "stump_count": unit.stump_count,
            }
        else:
            rec = {
                "kind": "tree",
                "features": list(unit.features),
                "lowers": [[None if not math.isfinite(v) else float(v) for v in row] for row in unit.lowers],
                "uppers": [[None if not math.isfinite(v) else float(v) for v in row] for row in unit.uppers],
                "gammas": [int(g) for g in unit.gammas],
            }
        if i < len(ens.numerical_names) and ens.numerical_names[i]:
            rec["name"] = ens.numerical_names[i]
        features.append(rec)
    for i, stump in enumerate(ens.categorical):
        rec = {
            "kind": "categorical",
            "feature": stump.feature,
            "gammas": [int(g) for g in stump.gammas],
        }
        if i < len(ens.categorical_names) and ens.categorical_names[i]:
            rec["name"] = ens.categorical_names[i]
        if i < len(ens.categories) and ens.categories[i]:
            rec["categories"] = list(ens.categories[i])
        features.append(rec)
    out = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "delta": ens.delta,
        "stump_count": ens.M,
        "features": features,
    }
    if metadata:
        out["metadata"] = metadata
    return out


def ensemble_from_dict(doc: dict) -> StumpEnsemble:
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFormatError(
            f"expected format {MODEL_FORMAT!r}, got {doc.get('format')!r}"
        )
    if doc.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            f"unsupported {MODEL_FORMAT} version {doc.get('version')!r}, expected {MODEL_VERSION}"
        )
    try:
        delta = int(doc["delta"])
        numerical, categorical = [], []
        num_names, cat_names, categories = [], [], []
        for rec in doc["features"]:
            kind = rec["kind"]
            if kind == "numerical":
                numerical.append(
                    MetaStump(
                        int(rec["feature"]),
                        np.asarray(rec["thresholds"], dtype=np.float64),
                        np.asarray(rec["gammas"], dtype=np.int64),
                        int(rec["stump_count"]),
                    )
                )
                num_names.append(rec.get("name", ""))
            elif kind == "tree":
                lowers = np.array(
                    [[-np.inf if v is None else v for v in row] for row in rec["lowers"]],
                    dtype=np.float64,
                )
                uppers = np.array(
                    [[np.inf if v is None else v for v in row] for row in rec["uppers"]],
                    dtype=np.float64,
                )
                numerical.append(
                    TreeRegionStump(
                        tuple(rec["features"]), lowers, uppers,
                        np.asarray(rec["gammas"], dtype=np.int64),
                    )
                )
                num_names.append(rec.get("name", ""))
            elif kind == "categorical":
                categorical.append(
                    CategoricalStump(int(rec["feature"]), np.asarray(rec["gammas"], dtype=np.int64))
                )
                cat_names.append(rec.get("name", ""))
                categories.append(tuple(rec.get("categories", ())))
            else:
                raise ModelFormatError(f"unknown feature kind {kind!r}")
        ens = StumpEnsemble(
            tuple(numerical), tuple(categorical), delta,
            tuple(num_names), tuple(cat_names), tuple(categories),
        )
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc
    if ens.M != int(doc.get("stump_count", ens.M)):
        raise ModelFormatError(
            f"stump_count {doc['stump_count']} does not match features (expected {ens.M})"
        )
    return ens


def save_ensemble(ens: StumpEnsemble, path, metadata: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(ensemble_to_dict(ens, metadata), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_ensemble(path) -> StumpEnsemble:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"not a JSON model file: {exc}") from exc
    return ensemble_from_dict(doc)
