"""Isotropic input randomization schemes and certificate radius maps.

Two schemes are supported, both with i.i.d. marginals across features:

* ``uniform``  -- additive Uniform([-scale, scale]) noise, giving l1 certificates
  with radius ``2 * scale * (p - 1/2)``.
* ``gaussian`` -- additive N(0, scale^2) noise, giving l2 certificates with
  radius ``scale * Phi^{-1}(p)``.

``radius_from_prob`` maps a success probability to the certifiable radius and
``prob_from_radius`` is its inverse, i.e. the success probability required to
certify a given radius.  All functions are pure and safe for concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import ndtr, ndtri

#: Reported radius when the success probability is exactly 1 under Gaussian
#: noise (the mathematical radius is infinite).
DEFAULT_RADIUS_CAP = 1e6


class NoiseKind(str, Enum):
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"


class NoCertificateError(ValueError):
    """Raised when a success probability <= 1/2 admits no certificate."""


@dataclass(frozen=True)
class NoiseModel:
    """An isotropic randomization scheme with positive scale.

    ``scale`` is the uniform half-width for ``uniform`` noise and the standard
    deviation for ``gaussian`` noise, in units of the normalized feature space.
    """

    kind: NoiseKind
    scale: float

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        object.__setattr__(self, "scale", float(self.scale))
        if not (math.isfinite(self.scale) and self.scale > 0.0):
            raise ValueError(f"noise scale must be positive and finite, got {self.scale!r}")


def centered_cdf(noise: NoiseModel, t):
    """P[x' <= t] for x' drawn from the noise marginal centered at 0.

    ``t`` may be a scalar or array and may contain +-inf.
    """
    t = np.asarray(t, dtype=np.float64)
    if noise.kind is NoiseKind.UNIFORM:
        lam = noise.scale
        return np.clip((t + lam) / (2.0 * lam), 0.0, 1.0)
    return ndtr(t / noise.scale)


def interval_prob(noise: NoiseModel, center: float, lo: float, hi: float) -> float:
    """P[lo < x' <= hi] for x' ~ noise centered at ``center``.

    ``lo``/``hi`` may be -inf/+inf.  Computed on the shifted interval
    (lo - center, hi - center] so that translation equivariance holds exactly.
    """
    if not math.isfinite(center):
        raise ValueError(f"center must be finite, got {center!r}")
    if math.isnan(lo) or math.isnan(hi) or lo > hi:
        raise ValueError(f"invalid interval ({lo!r}, {hi!r}]")
    return float(centered_cdf(noise, hi - center) - centered_cdf(noise, lo - center))


def region_probs(noise: NoiseModel, center: float, thresholds: np.ndarray) -> np.ndarray:
    """Probabilities of the k+1 regions cut by sorted ``thresholds``.

    Region j is (v_{j-1}, v_j] with v_{-1} = -inf and v_k = +inf.  The result
    sums to 1 exactly (telescoping differences of one CDF evaluation each).
    """
    if not math.isfinite(center):
        raise ValueError(f"center must be finite, got {center!r}")
    edges = centered_cdf(noise, np.asarray(thresholds, dtype=np.float64) - center)
    return np.diff(edges, prepend=0.0, append=1.0)


def radius_from_prob(noise: NoiseModel, p: float, cap: float = DEFAULT_RADIUS_CAP) -> float:
    """Certifiable radius rho(p) for success probability p in (0.5, 1].

    Gaussian noise with p == 1 maps to ``cap`` rather than literal infinity so
    that report tables stay finite.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"success probability must be in [0, 1], got {p!r}")
    if p <= 0.5:
        raise NoCertificateError(f"no certificate for success probability {p!r} <= 0.5")
    if noise.kind is NoiseKind.UNIFORM:
        return 2.0 * noise.scale * (p - 0.5)
    if p >= 1.0:
        return cap
    return min(noise.scale * float(ndtri(p)), cap)


def prob_from_radius(noise: NoiseModel, r: float) -> float:
    """Success probability rho^{-1}(r) required to certify radius ``r``.

    For uniform noise and r > scale the returned value exceeds 1: no success
    probability suffices (the radius is uncertifiable under that scheme).
    """
    if not r >= 0.0:
        raise ValueError(f"radius must be nonnegative, got {r!r}")
    if noise.kind is NoiseKind.UNIFORM:
        return r / (2.0 * noise.scale) + 0.5
    return float(ndtr(r / noise.scale))


def sample(noise: NoiseModel, rng: np.random.Generator, shape) -> np.ndarray:
    """Draw additive noise of the given shape."""
    if noise.kind is NoiseKind.UNIFORM:
        return rng.uniform(-noise.scale, noise.scale, size=shape)
    return rng.normal(0.0, noise.scale, size=shape)
