import numpy as np
import pytest

from stumpcert import _kernels_py, kernels


def _has_compiled():
    try:
        from stumpcert import _kernels  # noqa: F401

        return True
    except ImportError:
        return False


compiled = pytest.mark.skipif(not _has_compiled(), reason="extension not built")


def random_units(rng, n_units=5, max_atoms=4, top=40):
    gammas, probs, offsets = [], [], [0]
    for _ in range(n_units):
        k = int(rng.integers(1, max_atoms + 1))
        g = rng.integers(0, top, k)
        p = rng.dirichlet(np.ones(k))
        gammas.append(g)
        probs.append(p)
        offsets.append(offsets[-1] + k)
    return (
        np.concatenate(gammas).astype(np.int64),
        np.concatenate(probs),
        np.asarray(offsets, dtype=np.int64),
    )


def test_python_dp_pdf_mass_and_support():
    rng = np.random.default_rng(0)
    g, p, off = random_units(rng)
    lo, w = _kernels_py.dp_pdf(g, p, off)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    assert lo == sum(g[off[i]:off[i + 1]].min() for i in range(len(off) - 1))


def test_python_dp_tail_matches_pdf():
    rng = np.random.default_rng(1)
    for _ in range(20):
        g, p, off = random_units(rng)
        lo, w = _kernels_py.dp_pdf(g, p, off)
        for thr in (-1, 0, lo, lo + len(w) // 2, lo + len(w) + 5):
            expect = w[: max(0, thr - lo + 1)].sum()
            assert _kernels_py.dp_tail(g, p, off, thr) == pytest.approx(float(expect), abs=1e-12)


@compiled
def test_backends_agree_dp():
    from stumpcert import _kernels

    rng = np.random.default_rng(2)
    for _ in range(30):
        g, p, off = random_units(rng)
        lo_a, w_a = _kernels.dp_pdf(g, p, off)
        lo_b, w_b = _kernels_py.dp_pdf(g, p, off)
        assert lo_a == lo_b
        assert np.allclose(w_a, w_b, atol=1e-14)
        for thr in (0, 10, 50, 200):
            assert _kernels.dp_tail(g, p, off, thr) == pytest.approx(
                _kernels_py.dp_tail(g, p, off, thr), abs=1e-13
            )


@compiled
def test_backends_agree_cdf_sums():
    from stumpcert import _kernels

    rng = np.random.default_rng(3)
    for kind in (0, 1):
        x = rng.normal(0, 1, 50)
        w = rng.uniform(0, 1, (50, 3))
        grid = np.linspace(-3, 3, 117)
        a = _kernels.cdf_weighted_sums(x, w, grid, kind, 0.7)
        b = _kernels_py.cdf_weighted_sums(x, w, grid, kind, 0.7)
        assert np.allclose(a, b, atol=1e-12)


def test_dispatch_reports_backend():
    assert kernels.BACKEND in ("cython", "python")
    # the dispatched symbols are callable regardless of backend
    g = np.array([0, 3], dtype=np.int64)
    p = np.array([0.25, 0.75])
    off = np.array([0, 2], dtype=np.int64)
    lo, w = kernels.dp_pdf(g, p, off)
    assert lo == 0 and w[0] == pytest.approx(0.25) and w[3] == pytest.approx(0.75)


def test_pure_python_env_override(tmp_path):
    import subprocess
    import sys

    code = (
        "import os; os.environ['STUMPCERT_PURE_PYTHON']='1'; "
        "from stumpcert import kernels; print(kernels.BACKEND)"
    )
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True)
    assert out.stdout.strip() == "python"
