"""Boosting stump ensembles toward certified robustness.

Gradient boosting fits additional stumps to the residual between labels and
the *certifiable prediction* (a percentile of the smoothed output rather than
its median); adaptive boosting reweights samples by whether the current
member certifies them at a target radius and combines members by weighted
hard voting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from stumpcert.data import Dataset
from stumpcert.ensemble import (
    DecisionStump,
    StumpEnsemble,
    group_into_meta_stumps,
    meta_stump_to_stumps,
)
from stumpcert.noise import DEFAULT_RADIUS_CAP, NoiseKind, NoiseModel, centered_cdf
from stumpcert import kernels
from stumpcert.smoothing import (
    CertOutcome,
    certify_at_radius,
    certify_radius,
    compute_pdf,
    exact_success_probability,
    inverse_cdf,
)
from stumpcert.training import TrainConfig, fit_independent_ensemble, search_grid

ALPHA_EPS = 1e-6


@dataclass(frozen=True)
class TreeBoostConfig:
    train: TrainConfig
    q: float  # percentile of the output distribution used as training target
    n_extra: int
    target_radius: float = 0.0

    def __post_init__(self):
        if not 0.5 < self.q < 1.0:
            raise ValueError(f"percentile q must be in (0.5, 1), got {self.q}")
        if self.n_extra < 0:
            raise ValueError(f"n_extra must be nonnegative, got {self.n_extra}")


def certifiable_prediction(ens: StumpEnsemble, x_num, y: int, q: float,
                           noise: NoiseModel) -> float:
    """Output value the ensemble achieves with probability q against label y.

    For y = 0 this is the q-th percentile of the smoothed output (large values
    are bad); for y = 1 the (1-q)-th (small values are bad).  Certification at
    the radius with required probability q is equivalent to this value landing
    on y's side of 0.5.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"percentile must be in (0, 1), got {q}")
    pdf = compute_pdf(ens, x_num, noise)
    return inverse_cdf(pdf, q if y == 0 else 1.0 - q)


def _certifiable_predictions(ens: StumpEnsemble, data: Dataset, q: float,
                             noise: NoiseModel) -> np.ndarray:
    return np.array([
        certifiable_prediction(ens, data.numerical[i], int(data.labels[i]), q, noise)
        for i in range(data.n_samples)
    ])


def robtreeboost_step(stumps: list[DecisionStump], data: Dataset,
                      cfg: TreeBoostConfig) -> DecisionStump:
    """One gradient-boosting step: fit a stump to the certifiable residual.

    Splits minimize the expected-MSE impurity of the pseudo labels
    y~ = 1/2 + (y - y')/2 under the noise model.  Leaf values take a single
    Newton step in residual units, sum(p * (2y~-1)) over the curvature
    sum(p * |2y~-1| (1 - |2y~-1|)), mapped back to the leaf scale and falling
    back to the branch mean when the curvature vanishes (zero residual).
    """
    ens = StumpEnsemble(tuple(group_into_meta_stumps(stumps, cfg.train.delta)), (),
                        cfg.train.delta)
    y_cert = _certifiable_predictions(ens, data, cfg.q, cfg.train.noise)
    y_tilde = 0.5 + (data.labels - y_cert) / 2.0
    w = data.weights
    noise = cfg.train.noise
    kind = kernels.KIND_UNIFORM if noise.kind is NoiseKind.UNIFORM else kernels.KIND_GAUSSIAN

    best = None  # (impurity_score, feature, v)
    total_w = float(w.sum())
    total_s = float(np.sum(w * y_tilde))
    for feature in range(data.n_numerical):
        x = data.numerical[:, feature]
        grid = search_grid(x, cfg.train)
        xu, inv = np.unique(x, return_inverse=True)
        wu = np.zeros((len(xu), 2))
        np.add.at(wu[:, 0], inv, w)
        np.add.at(wu[:, 1], inv, w * y_tilde)
        sums = kernels.cdf_weighted_sums(xu, wu, grid, kind, noise.scale)
        n_l, s_l = sums[0], sums[1]
        n_r, s_r = total_w - n_l, total_s - s_l
        tiny = 1e-300
        score = s_l**2 / np.maximum(n_l, tiny) + s_r**2 / np.maximum(n_r, tiny)
        j = int(np.argmax(score))
        cand = (-float(score[j]), feature, float(grid[j]))
        if best is None or cand < best:
            best = cand
    _, feature, v = best

    x = data.numerical[:, feature]
    p_l = np.asarray(centered_cdf(noise, v - x))
    residual = 2.0 * y_tilde - 1.0  # back to signed residual units
    curvature = np.abs(residual) * (1.0 - np.abs(residual))
    floor = cfg.train.gamma_floor
    gammas = []
    for p_branch in (p_l, 1.0 - p_l):
        mass = float(np.sum(w * p_branch))
        mu = float(np.sum(w * p_branch * y_tilde)) / mass if mass > 1e-300 else 0.5
        den = float(np.sum(w * p_branch * curvature))
        if den < 1e-12:
            gamma = mu
        else:
            step = float(np.sum(w * p_branch * residual)) / den
            gamma = 0.5 + step / 2.0
        gammas.append(min(max(gamma, floor), 1.0 - floor))
    return DecisionStump(feature, v, gammas[0], gammas[1])


def robtreeboost_fit(data: Dataset, cfg: TreeBoostConfig) -> StumpEnsemble:
    """Independent MLE-optimal ensemble followed by n_extra boosting steps."""
    init = fit_independent_ensemble(data, cfg.train)
    if init.categorical:
        raise ValueError("gradient boosting supports numerical features only")
    stumps: list[DecisionStump] = []
    for unit in init.numerical:
        stumps.extend(meta_stump_to_stumps(unit, cfg.train.delta))
    for _ in range(cfg.n_extra):
        stumps.append(robtreeboost_step(stumps, data, cfg))
    return StumpEnsemble(
        tuple(group_into_meta_stumps(stumps, cfg.train.delta)), (), cfg.train.delta,
        numerical_names=init.numerical_names,
    )


# -- adaptive boosting --------------------------------------------------------


@dataclass(frozen=True)
class AdaBoostEnsemble:
    """Hard-voting ensemble of stump ensembles with per-member weights."""

    members: tuple
    alphas: tuple
    target_radius: float

    def __post_init__(self):
        if not self.members or len(self.members) != len(self.alphas):
            raise ValueError("members and alphas must be nonempty and aligned")


def robadaboost_fit(data: Dataset, K: int, r: float, cfg: TrainConfig) -> AdaBoostEnsemble:
    """K rounds of certifiability-driven adaptive boosting at target radius r."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    w = np.asarray(data.weights, dtype=np.float64).copy()
    members, alphas = [], []
    for _ in range(K):
        member = fit_independent_ensemble(data.with_weights(w), cfg)
        certified = np.array([
            certify_at_radius(
                member,
                data.numerical[i] if data.n_numerical else None,
                int(data.labels[i]),
                cfg.noise,
                r,
                x_cat=data.categorical[i] if data.n_categorical else None,
            )
            for i in range(data.n_samples)
        ])
        err = float(np.sum(w * (~certified)) / np.sum(w))
        err_c = min(max(err, ALPHA_EPS), 1.0 - ALPHA_EPS)
        alpha = math.log((1.0 - err_c) / err_c)
        members.append(member)
        alphas.append(alpha)
        w = w * np.exp(alpha * (~certified))
        w = w / w.sum()
    return AdaBoostEnsemble(tuple(members), tuple(alphas), r)


def robadaboost_predict(F: AdaBoostEnsemble, x_num, noise: NoiseModel, x_cat=None) -> int:
    """Weighted hard vote of the members' exact smoothed predictions."""
    score = sum(
        a for a, m in zip(F.alphas, F.members)
        if exact_success_probability(m, x_num, 1, noise, x_cat) > 0.5
    )
    return int(score > sum(F.alphas) / 2.0)


def robadaboost_certify(F: AdaBoostEnsemble, x_num, y: int, noise: NoiseModel,
                        cap: float = DEFAULT_RADIUS_CAP, x_cat=None) -> CertOutcome:
    """Largest radius at which members carrying > half the total |alpha| certify y.

    Member radii (misclassified members count as -inf) are sorted decreasing,
    ties broken by member index; the first prefix whose alpha sum exceeds
    sum|alpha|/2 yields the certified radius.
    """
    radii = []
    for m in F.members:
        out = certify_radius(m, x_num, y, noise, x_cat=x_cat, cap=cap)
        radii.append(out.radius if out.certified else -math.inf)
    order = sorted(range(len(radii)), key=lambda k: (-radii[k], k))
    half = sum(abs(a) for a in F.alphas) / 2.0
    prefix = 0.0
    for pos, k in enumerate(order):
        prefix += F.alphas[k]
        if prefix > half:
            r = radii[k]
            if r == -math.inf:
                return CertOutcome(False, 0.0)
            return CertOutcome(True, r)
    return CertOutcome(False, 0.0)
