"""Training stump ensembles for certifiability under input randomization.

Split positions are chosen by line search over a grid extending beyond the
data range, minimizing the class-conditional entropy of the *expected* branch
probabilities under the noise model; leaf predictions then have a closed form
that is jointly MLE-optimal with the entropy-minimizing split.  Two reference
training modes are included for ablations: ``sampling`` draws one noisy
replicate per training point and fits with hard branch indicators, ``default``
fits with hard indicators on the clean data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from stumpcert import kernels
from stumpcert.data import Dataset
from stumpcert.ensemble import (
    CategoricalStump,
    DecisionStump,
    StumpEnsemble,
    group_into_meta_stumps,
    leaf_to_grid,
)
from stumpcert.noise import NoiseKind, NoiseModel, centered_cdf, sample

FIT_MODES = ("mle", "sampling", "default")


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    noise: NoiseModel
    delta: int = 100
    search_step: float = 0.01
    search_margin: float = 2.0  # grid extends margin * noise scale past the data range
    impurity_threshold: float = 0.95 * math.log(2.0)
    gamma_floor: float = 1e-6
    fit_mode: str = "mle"
    sampling_seed: int = 0
    # Branch probabilities conditioned on the label, i.e. classes contribute
    # equal total weight.  Without this, every leaf of a weak stump sits at
    # the class prior and large-noise ensembles collapse to the majority
    # class on imbalanced data.
    class_balance: bool = True

    def __post_init__(self):
        if self.delta < 2:
            raise ValueError(f"delta must be >= 2, got {self.delta}")
        if not self.search_step > 0:
            raise ValueError(f"search_step must be positive, got {self.search_step}")
        if not 0.0 < self.impurity_threshold <= math.log(2.0) + 1e-12:
            raise ValueError(
                f"impurity_threshold must be in (0, ln 2], got {self.impurity_threshold}"
            )
        if self.fit_mode not in FIT_MODES:
            raise ValueError(f"fit_mode must be one of {FIT_MODES}, got {self.fit_mode!r}")

    def to_dict(self) -> dict:
        return {
            "noise_kind": self.noise.kind.value,
            "noise_scale": self.noise.scale,
            "delta": self.delta,
            "search_step": self.search_step,
            "search_margin": self.search_margin,
            "impurity_threshold": self.impurity_threshold,
            "gamma_floor": self.gamma_floor,
            "fit_mode": self.fit_mode,
            "sampling_seed": self.sampling_seed,
            "class_balance": self.class_balance,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        noise = NoiseModel(NoiseKind(doc["noise_kind"]), float(doc["noise_scale"]))
        kwargs = {k: doc[k] for k in (
            "delta", "search_step", "search_margin", "impurity_threshold",
            "gamma_floor", "fit_mode", "sampling_seed", "class_balance",
        ) if k in doc}
        return cls(noise=noise, **kwargs)

    @classmethod
    def from_file(cls, path) -> "TrainConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def search_grid(values: np.ndarray, cfg: TrainConfig) -> np.ndarray:
    """Candidate split positions: data range padded by margin * noise scale."""
    lo = float(np.min(values)) - cfg.search_margin * cfg.noise.scale
    hi = float(np.max(values)) + cfg.search_margin * cfg.noise.scale
    n = int(math.floor((hi - lo) / cfg.search_step + 1e-9)) + 1
    return lo + cfg.search_step * np.arange(n)


def class_branch_probs(data: Dataset, feature: int, v: float, noise: NoiseModel):
    """Expected branch probabilities (p0_l, p1_l, p0_r, p1_r) at split v.

    p^y_j is the weight-averaged probability of a class-y training point
    landing in branch j under the noise model; the four entries sum to 1.
    """
    if not math.isfinite(v):
        raise ValueError(f"split position must be finite, got {v!r}")
    x = data.numerical[:, feature]
    p_l = np.asarray(centered_cdf(noise, v - x), dtype=np.float64)
    w = data.weights
    y = data.labels
    p0_l = float(np.sum(w[y == 0] * p_l[y == 0]))
    p1_l = float(np.sum(w[y == 1] * p_l[y == 1]))
    p0 = float(np.sum(w[y == 0]))
    p1 = float(np.sum(w[y == 1]))
    return p0_l, p1_l, p0 - p0_l, p1 - p1_l


def entropy_impurity(branch_probs) -> float:
    """H = -sum_j sum_y p^y_j log(p^y_j / p_j), with 0 log 0 = 0."""
    p0_l, p1_l, p0_r, p1_r = branch_probs
    for p in branch_probs:
        if p < -1e-9:
            raise ValueError(f"branch probabilities must be nonnegative, got {branch_probs}")
    total = p0_l + p1_l + p0_r + p1_r
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"branch probabilities must sum to 1, got {total}")
    h = 0.0
    for a, b in ((p0_l, p1_l), (p0_r, p1_r)):
        pj = a + b
        for p in (a, b):
            if p > 0.0:
                h -= p * math.log(p / pj)
    return h


def _entropy_curve(p0_l, p1_l, p0, p1):
    """Vectorized entropy over a grid of candidate splits."""
    p0_l = np.clip(p0_l, 0.0, p0)
    p1_l = np.clip(p1_l, 0.0, p1)
    p0_r = p0 - p0_l
    p1_r = p1 - p1_l

    def term(p, pj):
        out = np.zeros_like(pj)
        mask = p > 0.0
        out[mask] = p[mask] * np.log(p[mask] / pj[mask])
        return out

    pl = p0_l + p1_l
    pr = p0_r + p1_r
    return -(term(p0_l, pl) + term(p1_l, pl) + term(p0_r, pr) + term(p1_r, pr))


def _effective_positions(data: Dataset, feature: int, cfg: TrainConfig) -> tuple[np.ndarray, bool]:
    """Per-sample positions and whether branch membership is hard (indicator)."""
    x = data.numerical[:, feature]
    if cfg.fit_mode == "mle":
        return x, False
    if cfg.fit_mode == "default":
        return x, True
    rng = np.random.default_rng(np.random.SeedSequence(cfg.sampling_seed, spawn_key=(feature,)))
    return x + sample(cfg.noise, rng, x.shape), True


def _grid_class_sums(x, w0, w1, grid, noise: NoiseModel, hard: bool):
    """p^0_l and p^1_l over the whole grid of candidate splits."""
    if hard:
        order = np.argsort(x, kind="stable")
        xs = x[order]
        c0 = np.concatenate(([0.0], np.cumsum(w0[order])))
        c1 = np.concatenate(([0.0], np.cumsum(w1[order])))
        idx = np.searchsorted(xs, grid, side="right")  # x <= v lands left
        return c0[idx], c1[idx]
    # collapse duplicate positions; the weighted CDF sums are linear per value
    xu, inv = np.unique(x, return_inverse=True)
    wu = np.zeros((len(xu), 2))
    np.add.at(wu[:, 0], inv, w0)
    np.add.at(wu[:, 1], inv, w1)
    kind = kernels.KIND_UNIFORM if noise.kind is NoiseKind.UNIFORM else kernels.KIND_GAUSSIAN
    sums = kernels.cdf_weighted_sums(xu, wu, grid, kind, noise.scale)
    return sums[0], sums[1]


def fit_stump(data: Dataset, feature: int, cfg: TrainConfig) -> tuple[DecisionStump, float]:
    """Best split for one feature plus its impurity at the chosen position.

    The split minimizes the entropy impurity over the search grid (ties break
    toward the smallest position); leaves use the closed-form MLE estimates
    clamped to [gamma_floor, 1 - gamma_floor].
    """
    x, hard = _effective_positions(data, feature, cfg)
    if len(x) == 0:
        raise TrainingError(f"feature {feature} has no samples to fit")
    w = data.weights
    y = data.labels
    w0 = np.where(y == 0, w, 0.0)
    w1 = np.where(y == 1, w, 0.0)
    p0, p1 = float(w0.sum()), float(w1.sum())

    grid = search_grid(x, cfg)
    p0_l, p1_l = _grid_class_sums(x, w0, w1, grid, cfg.noise, hard)
    curve = _entropy_curve(p0_l, p1_l, p0, p1)
    best = int(np.argmin(curve))
    v = float(grid[best])
    gamma_l = _mle_leaf(p1_l[best], p0_l[best], p1, cfg.gamma_floor)
    gamma_r = _mle_leaf(p1 - p1_l[best], p0 - p0_l[best], p1, cfg.gamma_floor)
    return DecisionStump(feature, v, gamma_l, gamma_r), float(curve[best])


def _mle_leaf(p1_j: float, p0_j: float, prior1: float, floor: float) -> float:
    denom = p1_j + p0_j
    gamma = prior1 if denom < 1e-300 else p1_j / denom
    return min(max(gamma, floor), 1.0 - floor)


def fit_categorical_stump(data: Dataset, feature: int, delta: int) -> CategoricalStump:
    """Per-category grid value: 0.625 for weighted-majority class 1, else 0.375.

    Categories unseen in the training data default to the class-0 value.
    """
    cardinality = len(data.categories[feature]) if data.categories else int(
        data.categorical[:, feature].max() + 1
    )
    vals = data.categorical[:, feature]
    gammas = np.empty(cardinality, dtype=np.int64)
    lo, hi = leaf_to_grid(0.375, delta), leaf_to_grid(0.625, delta)
    for c in range(cardinality):
        mask = vals == c
        w1 = float(np.sum(data.weights[mask & (data.labels == 1)]))
        w0 = float(np.sum(data.weights[mask & (data.labels == 0)]))
        gammas[c] = hi if w1 > w0 else lo
    return CategoricalStump(feature, gammas)


def balanced_weights(data: Dataset) -> np.ndarray:
    """Rescale weights so both classes carry total weight 1/2 (if both occur)."""
    w = np.asarray(data.weights, dtype=np.float64)
    out = w.copy()
    totals = [float(w[data.labels == c].sum()) for c in (0, 1)]
    if min(totals) <= 0.0:
        return out  # single-class data: nothing to balance
    for c in (0, 1):
        out[data.labels == c] *= 0.5 / totals[c]
    return out


def fit_independent_ensemble(data: Dataset, cfg: TrainConfig) -> StumpEnsemble:
    """One stump per feature, keeping numerical stumps with impurity <= threshold."""
    if cfg.class_balance:
        data = data.with_weights(balanced_weights(data))
    kept: list[DecisionStump] = []
    for feature in range(data.n_numerical):
        stump, h = fit_stump(data, feature, cfg)
        if h <= cfg.impurity_threshold:
            kept.append(stump)
    categorical = tuple(
        fit_categorical_stump(data, f, cfg.delta) for f in range(data.n_categorical)
    )
    if not kept and not categorical:
        raise TrainingError(
            "every stump was rejected by the impurity threshold "
            f"({cfg.impurity_threshold:.4f}); relax impurity_threshold"
        )
    numerical = tuple(group_into_meta_stumps(kept, cfg.delta))
    return StumpEnsemble(
        numerical,
        categorical,
        cfg.delta,
        numerical_names=tuple(data.numerical_names[s.feature] for s in numerical)
        if data.numerical_names
        else (),
        categorical_names=tuple(data.categorical_names) if data.categorical_names else (),
        categories=tuple(tuple(c) for c in data.categories) if data.categories else (),
    )
