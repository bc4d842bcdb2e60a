"""Exact evaluation and certification of smoothed stump ensembles.

Under an isotropic randomization scheme the per-feature units of an ensemble
produce independent discrete contributions on the grid {0, ..., M*delta}.
``compute_pdf`` aggregates them by dynamic programming into the exact output
distribution; ``cdf``/``inverse_cdf`` query it; the certify_* functions turn
exact success probabilities into deterministic radius certificates, including
joint certificates where up to r0 categorical features are adversarially
flipped while numerical features move inside an lp ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from stumpcert import kernels
from stumpcert.ensemble import MetaStump, StumpEnsemble, TreeRegionStump
from stumpcert.noise import (
    DEFAULT_RADIUS_CAP,
    NoiseModel,
    centered_cdf,
    prob_from_radius,
    radius_from_prob,
    region_probs,
)

#: Slack for comparing exact probabilities against required thresholds; the DP
#: accumulates O(M * delta) float additions, well below this.
PROB_ATOL = 1e-12


@dataclass(frozen=True)
class OutputPDF:
    """Distribution of the ensemble total on the grid t in {0, ..., m_delta}.

    Only the window [lo, lo + len(weights)) of nonzero entries is stored.
    """

    m_delta: int
    lo: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", w)
        if self.lo < 0 or self.lo + len(w) - 1 > self.m_delta:
            raise ValueError("pdf support outside the output grid")
        if np.any(w < 0):
            raise ValueError("pdf weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"pdf weights sum to {w.sum()!r}, expected 1")

    @property
    def hi(self) -> int:
        return self.lo + len(self.weights) - 1


@dataclass(frozen=True)
class CategoricalShift:
    """Worst-case grid effect of flipping at most r0 categorical features."""

    delta_up: int
    delta_down: int
    r0: int


@dataclass(frozen=True)
class CertOutcome:
    """Result of one certification query.

    ``certified`` is False for misclassified samples (success probability not
    above 1/2); such samples contribute radius 0 to the average certified
    radius.  ``p_y`` is None for voting ensembles without a single success
    probability.
    """

    certified: bool
    radius: float
    p_y: float | None = None


def unit_atoms(unit, x_num: np.ndarray, noise: NoiseModel):
    """Atoms (grid value, probability) of one unit's contribution at x.

    Zero-probability atoms are dropped (exact: they cannot contribute), which
    keeps the DP window tight under bounded-support noise.
    """
    if isinstance(unit, MetaStump):
        probs = region_probs(noise, float(x_num[unit.feature]), unit.thresholds)
        gammas = unit.gammas
    elif isinstance(unit, TreeRegionStump):
        probs = np.ones(len(unit.gammas), dtype=np.float64)
        for i, f in enumerate(unit.features):
            c = float(x_num[f])
            probs *= centered_cdf(noise, unit.uppers[:, i] - c) - centered_cdf(
                noise, unit.lowers[:, i] - c
            )
        gammas = unit.gammas
    else:
        raise TypeError(f"not a numerical unit: {type(unit).__name__}")
    keep = probs > 0.0
    if not np.all(keep):
        probs, gammas = probs[keep], gammas[keep]
    return np.asarray(gammas, dtype=np.int64), probs


def _flatten_units(ens: StumpEnsemble, x_num, noise: NoiseModel):
    x_num = np.asarray(x_num, dtype=np.float64)
    gammas, probs, offsets = [], [], [0]
    for unit in ens.numerical:
        g, p = unit_atoms(unit, x_num, noise)
        gammas.append(g)
        probs.append(p)
        offsets.append(offsets[-1] + len(g))
    return (
        np.concatenate(gammas) if gammas else np.empty(0, dtype=np.int64),
        np.concatenate(probs) if probs else np.empty(0, dtype=np.float64),
        np.asarray(offsets, dtype=np.int64),
    )


def compute_pdf(ens: StumpEnsemble, x_num, noise: NoiseModel) -> OutputPDF:
    """Exact distribution of the summed numerical unit contributions at x.

    Categorical stumps are excluded: they add a deterministic offset handled
    by the joint certification path.
    """
    if not ens.numerical:
        raise ValueError("compute_pdf needs at least one numerical unit")
    gammas, probs, offsets = _flatten_units(ens, x_num, noise)
    lo, weights = kernels.dp_pdf(gammas, probs, offsets)
    return OutputPDF(ens.m_delta, lo, weights)


def numeric_tail(ens: StumpEnsemble, x_num, noise: NoiseModel, thr: int) -> float:
    """P[numerical total <= thr], exactly; 1 for ensembles without numerical units."""
    if not ens.numerical:
        return 1.0 if thr >= 0 else 0.0
    gammas, probs, offsets = _flatten_units(ens, x_num, noise)
    p = kernels.dp_tail(gammas, probs, offsets, int(thr))
    return min(max(p, 0.0), 1.0)  # the row sum can overshoot 1 by a few ulp


def cdf(pdf: OutputPDF, z: float) -> float:
    """P[output <= z] for z in [0, 1]: the mass at grid indices <= floor(z * m_delta)."""
    if not 0.0 <= z <= 1.0:
        raise ValueError(f"z must be in [0, 1], got {z!r}")
    idx = math.floor(z * pdf.m_delta)
    if idx < pdf.lo:
        return 0.0
    return float(pdf.weights[: idx - pdf.lo + 1].sum())


def success_probability(pdf: OutputPDF, y: int) -> float:
    """Probability that the induced classifier outputs y (ties count as 0)."""
    if y not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {y!r}")
    p0 = cdf(pdf, 0.5)
    return p0 if y == 0 else 1.0 - p0


def inverse_cdf(pdf: OutputPDF, z: float) -> float:
    """Generalized inverse of the step CDF: min{t/m_delta : P[<= t] >= z}."""
    if not 0.0 < z <= 1.0:
        raise ValueError(f"z must be in (0, 1], got {z!r}")
    cum = np.cumsum(pdf.weights)
    idx = int(np.searchsorted(cum, z, side="left"))
    idx = min(idx, len(cum) - 1)  # z == 1 vs. cum[-1] = 1 - eps
    return (pdf.lo + idx) / pdf.m_delta


# -- certification -----------------------------------------------------------


def _half_index(ens: StumpEnsemble) -> int:
    return (ens.M * ens.delta) // 2  # floor(0.5 * M * delta)


def exact_success_probability(
    ens: StumpEnsemble,
    x_num,
    y: int,
    noise: NoiseModel,
    x_cat=None,
    shift_up: int = 0,
    shift_down: int = 0,
) -> float:
    """Success probability of label y, with optional worst-case grid shifts.

    ``shift_up``/``shift_down`` tighten the decision threshold by the
    adversarial categorical effect (used by joint certificates).
    """
    if y not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {y!r}")
    offset = ens.categorical_offset(x_cat) if ens.categorical else 0
    half = _half_index(ens)
    if y == 0:
        return numeric_tail(ens, x_num, noise, half - offset - shift_up)
    return 1.0 - numeric_tail(ens, x_num, noise, half - offset + shift_down)


def smoothed_predict(ens: StumpEnsemble, x_num, noise: NoiseModel, x_cat=None) -> int:
    """Exact prediction of the smoothed classifier (tie -> class 0)."""
    p1 = exact_success_probability(ens, x_num, 1, noise, x_cat)
    return int(p1 > 0.5)


def certify_radius(
    ens: StumpEnsemble,
    x_num,
    y: int,
    noise: NoiseModel,
    x_cat=None,
    cap: float = DEFAULT_RADIUS_CAP,
) -> CertOutcome:
    """Largest certifiable lp radius at x toward label y, or Misclassified."""
    p_y = exact_success_probability(ens, x_num, y, noise, x_cat)
    if p_y <= 0.5:
        return CertOutcome(False, 0.0, p_y)
    return CertOutcome(True, radius_from_prob(noise, p_y, cap), p_y)


def certify_at_radius(
    ens: StumpEnsemble,
    x_num,
    y: int,
    noise: NoiseModel,
    r: float,
    x_cat=None,
) -> bool:
    """Whether the prediction y is certified for all perturbations ||d||_p < r."""
    if not r >= 0.0:
        raise ValueError(f"radius must be nonnegative, got {r!r}")
    p_y = exact_success_probability(ens, x_num, y, noise, x_cat)
    return p_y > 0.5 and p_y >= prob_from_radius(noise, r) - PROB_ATOL


def categorical_worst_case(ens: StumpEnsemble, x_cat, r0: int) -> CategoricalShift:
    """Worst-case grid shifts over all <= r0 categorical reassignments.

    Per stump the extreme effects are u_i - q_i upward and q_i - l_i downward
    (q_i current, u_i/l_i max/min over categories); greedily summing the r0
    largest per direction is exact because per-feature effects are independent.
    r0 beyond the number of categorical features is clamped.
    """
    if r0 < 0:
        raise ValueError(f"r0 must be nonnegative, got {r0!r}")
    r0 = min(r0, len(ens.categorical))
    if r0 == 0:
        return CategoricalShift(0, 0, 0)
    ups, downs = [], []
    for stump in ens.categorical:
        v = int(x_cat[stump.feature])
        if not 0 <= v < stump.cardinality:
            raise ValueError(
                f"categorical feature {stump.feature} value {v} outside [0, {stump.cardinality})"
            )
        q = int(stump.gammas[v])
        ups.append(int(stump.gammas.max()) - q)
        downs.append(q - int(stump.gammas.min()))
    ups.sort(reverse=True)
    downs.sort(reverse=True)
    return CategoricalShift(int(sum(ups[:r0])), int(sum(downs[:r0])), r0)


def joint_certify(
    ens: StumpEnsemble,
    x_num,
    x_cat,
    y: int,
    noise: NoiseModel,
    r0: int,
    cap: float = DEFAULT_RADIUS_CAP,
) -> CertOutcome:
    """Joint certificate: lp radius that holds under any <= r0 categorical flips.

    The categorical worst case shifts the decision threshold against label y
    before the exact numerical success probability is computed; a certificate
    (r0, R) then covers every input with at most r0 flipped categorical
    features and numerical perturbation of lp norm < R.
    """
    shift = categorical_worst_case(ens, x_cat, r0)
    p_y = exact_success_probability(
        ens,
        x_num,
        y,
        noise,
        x_cat,
        shift_up=shift.delta_up if y == 0 else 0,
        shift_down=shift.delta_down if y == 1 else 0,
    )
    if p_y <= 0.5:
        return CertOutcome(False, 0.0, p_y)
    return CertOutcome(True, radius_from_prob(noise, p_y, cap), p_y)
