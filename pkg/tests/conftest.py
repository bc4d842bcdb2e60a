import itertools

import numpy as np
import pytest
from scipy.stats import norm, uniform

import stumpcert as sc
from stumpcert.data import make_dataset
from stumpcert.ensemble import MetaStump, StumpEnsemble, TreeRegionStump


# -- independent probability oracles (no stumpcert internals) -----------------


def oracle_cdf(noise, center, t):
    """Marginal CDF via scipy.stats, independent of the library implementation."""
    if noise.kind is sc.NoiseKind.UNIFORM:
        return uniform.cdf(t, loc=center - noise.scale, scale=2 * noise.scale)
    return norm.cdf(t, loc=center, scale=noise.scale)


def oracle_unit_atoms(unit, x, noise):
    """Per-unit contribution atoms computed from scratch."""
    if isinstance(unit, MetaStump):
        edges = [oracle_cdf(noise, x[unit.feature], v) for v in unit.thresholds]
        edges = [0.0] + edges + [1.0]
        probs = np.diff(edges)
        return np.asarray(unit.gammas), probs
    assert isinstance(unit, TreeRegionStump)
    probs = []
    for j in range(len(unit.gammas)):
        p = 1.0
        for i, f in enumerate(unit.features):
            p *= oracle_cdf(noise, x[f], unit.uppers[j, i]) - oracle_cdf(
                noise, x[f], unit.lowers[j, i]
            )
        probs.append(p)
    return np.asarray(unit.gammas), np.asarray(probs)


def brute_force_pdf(ens, x, noise):
    """Distribution of the summed unit contributions by explicit enumeration."""
    atoms = [oracle_unit_atoms(u, x, noise) for u in ens.numerical]
    out = {}
    for combo in itertools.product(*[range(len(g)) for g, _ in atoms]):
        t = sum(int(atoms[i][0][j]) for i, j in enumerate(combo))
        p = 1.0
        for i, j in enumerate(combo):
            p *= atoms[i][1][j]
        out[t] = out.get(t, 0.0) + p
    return out


def random_ensemble(rng, n_features=None, max_stumps=3, delta=10):
    """Random stump ensemble for DP-vs-enumeration checks."""
    d = n_features or rng.integers(1, 7)
    stumps = []
    for f in range(d):
        for _ in range(rng.integers(1, max_stumps + 1)):
            stumps.append(
                sc.DecisionStump(f, float(rng.uniform(-1.5, 1.5)),
                                 float(rng.uniform()), float(rng.uniform()))
            )
    units = sc.group_into_meta_stumps(stumps, delta)
    return StumpEnsemble(tuple(units), (), delta)


def random_noise(rng):
    kind = sc.NoiseKind.UNIFORM if rng.random() < 0.5 else sc.NoiseKind.GAUSSIAN
    return sc.NoiseModel(kind, float(rng.uniform(0.2, 2.5)))


# -- datasets ------------------------------------------------------------------


@pytest.fixture(scope="session")
def wdbc_split():
    """Breast cancer data (30-feature diagnostic set), first-80% split, minmax."""
    sklearn = pytest.importorskip("sklearn.datasets")
    raw = sklearn.load_breast_cancer()
    X, y = raw.data, raw.target
    cut = int(len(y) * 0.8)
    lo, hi = X[:cut].min(0), X[:cut].max(0)
    span = np.where(hi > lo, hi - lo, 1.0)
    train = make_dataset((X[:cut] - lo) / span, y[:cut])
    test = make_dataset((X[cut:] - lo) / span, y[cut:])
    return train, test


@pytest.fixture()
def blobs():
    """Separable two-class blobs in 4 dims."""
    rng = np.random.default_rng(42)
    n = 120
    X0 = rng.normal(0.25, 0.06, (n // 2, 4))
    X1 = rng.normal(0.75, 0.06, (n // 2, 4))
    X = np.vstack([X0, X1])
    y = np.array([0] * (n // 2) + [1] * (n // 2))
    perm = rng.permutation(n)
    return make_dataset(X[perm], y[perm])
