"""Sampling-based randomized smoothing baseline for the same ensembles.

Estimates a one-sided Clopper-Pearson lower confidence bound on the success
probability from Monte Carlo evaluations of the base ensemble under noise and
certifies with the same radius map as the deterministic path.  Used for the
DRS-vs-RS ablation; abstains when the bound does not exceed 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import beta

from stumpcert.ensemble import StumpEnsemble
from stumpcert.noise import DEFAULT_RADIUS_CAP, NoiseModel, radius_from_prob, sample

_CHUNK = 8192  # fixed so the per-chunk RNG streams never depend on scheduling


@dataclass(frozen=True)
class RsConfig:
    n_samples: int
    alpha: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class RsOutcome:
    abstained: bool
    radius: float
    p_lower: float
    successes: int
    n_samples: int


def clopper_pearson_lower(k: int, n: int, alpha: float) -> float:
    """One-sided lower confidence bound for a binomial proportion at level 1 - alpha."""
    if k <= 0:
        return 0.0
    if k >= n:
        return float(alpha ** (1.0 / n))
    return float(beta.ppf(alpha, k, n - k + 1))


def rs_certify(ens: StumpEnsemble, x_num, y: int, noise: NoiseModel, cfg: RsConfig,
               cap: float = DEFAULT_RADIUS_CAP) -> RsOutcome:
    """Monte Carlo certification of label y at x; abstains if the bound <= 1/2.

    Per-chunk RNG streams are derived from (seed, chunk index), so the result
    is a pure function of the seed no matter how chunks are scheduled.
    """
    if y not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {y!r}")
    x_num = np.asarray(x_num, dtype=np.float64)
    k = 0
    done = 0
    chunk_idx = 0
    while done < cfg.n_samples:
        m = min(_CHUNK, cfg.n_samples - done)
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(chunk_idx,)))
        noisy = x_num[None, :] + sample(noise, rng, (m, len(x_num)))
        _, classes = ens.predict_clean_batch(noisy)
        k += int(np.sum(classes == y))
        done += m
        chunk_idx += 1
    p_lower = clopper_pearson_lower(k, cfg.n_samples, cfg.alpha)
    if p_lower <= 0.5:
        return RsOutcome(True, 0.0, p_lower, k, cfg.n_samples)
    return RsOutcome(False, radius_from_prob(noise, p_lower, cap), p_lower, k, cfg.n_samples)
