"""Kernel dispatch: compiled Cython extension with a pure numpy fallback.

The backend is chosen once at import.  Set ``STUMPCERT_PURE_PYTHON=1`` to
force the fallback (used by the benchmark and to debug the extension).
"""

from __future__ import annotations

import os

from stumpcert import _kernels_py

if os.environ.get("STUMPCERT_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from stumpcert import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

KIND_GAUSSIAN = _kernels_py.KIND_GAUSSIAN
KIND_UNIFORM = _kernels_py.KIND_UNIFORM

dp_pdf = _impl.dp_pdf
dp_tail = _impl.dp_tail
cdf_weighted_sums = _impl.cdf_weighted_sums
