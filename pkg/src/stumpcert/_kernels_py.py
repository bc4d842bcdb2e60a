"""Pure numpy implementations of the hot kernels.

Mirror of the compiled ``_kernels`` extension; see ``kernels`` for the
dispatch.  Units are passed as flat arrays: unit i owns the atoms
``gammas[offsets[i]:offsets[i+1]]`` with matching probabilities, where an atom
(g, p) means the unit adds g grid steps to the ensemble total with
probability p.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtr

KIND_GAUSSIAN = 0
KIND_UNIFORM = 1


def dp_pdf(gammas: np.ndarray, probs: np.ndarray, offsets: np.ndarray):
    """Exact distribution of the summed unit contributions.

    Returns ``(lo, weights)``: the support starts at grid index ``lo`` and
    ``weights[t]`` is P[total = lo + t].  One row is kept and only the window
    of nonzero entries is stored.
    """
    row = np.ones(1, dtype=np.float64)
    lo = 0
    for u in range(len(offsets) - 1):
        g = gammas[offsets[u]:offsets[u + 1]]
        p = probs[offsets[u]:offsets[u + 1]]
        gmin, gmax = int(g.min()), int(g.max())
        new = np.zeros(len(row) + gmax - gmin, dtype=np.float64)
        for a in range(len(g)):
            if p[a] != 0.0:
                start = int(g[a]) - gmin
                new[start:start + len(row)] += p[a] * row
        row = new
        lo += gmin
    return lo, row


def dp_tail(gammas: np.ndarray, probs: np.ndarray, offsets: np.ndarray, thr: int) -> float:
    """P[total <= thr], tracking only the window at or below ``thr``.

    Unit contributions are nonnegative, so mass that crosses ``thr`` can never
    come back and is simply dropped; the tail probability is the final row sum.
    """
    if thr < 0:
        return 0.0
    row = np.ones(1, dtype=np.float64)
    lo = 0
    for u in range(len(offsets) - 1):
        g = gammas[offsets[u]:offsets[u + 1]]
        p = probs[offsets[u]:offsets[u + 1]]
        gmin = int(g.min())
        new_lo = lo + gmin
        if new_lo > thr:
            return 0.0
        width = min(lo + len(row) - 1 + int(g.max()), thr) - new_lo + 1
        new = np.zeros(width, dtype=np.float64)
        for a in range(len(g)):
            if p[a] != 0.0:
                start = int(g[a]) - gmin
                keep = min(len(row), width - start)
                if keep > 0:
                    new[start:start + keep] += p[a] * row[:keep]
        row = new
        lo = new_lo
    return float(row.sum())


def cdf_weighted_sums(x: np.ndarray, weights: np.ndarray, grid: np.ndarray,
                      kind: int, scale: float) -> np.ndarray:
    """Weighted sums of noise CDFs over a threshold grid.

    Returns ``S[k, g] = sum_i weights[i, k] * P[x_i' <= grid[g]]`` where x_i'
    is the noise marginal centered at x[i].  This is the inner loop of the
    split-position line search.
    """
    x = np.asarray(x, dtype=np.float64)
    grid = np.asarray(grid, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    z = grid[None, :] - x[:, None]
    if kind == KIND_UNIFORM:
        cdf = np.clip((z + scale) / (2.0 * scale), 0.0, 1.0)
    else:
        cdf = ndtr(z / scale)
    return weights.T @ cdf
