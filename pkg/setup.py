import os

import numpy
from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("STUMPCERT_SKIP_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "stumpcert._kernels",
                    ["src/stumpcert/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # No Cython available: install the pure-Python package; the kernels
        # module falls back to the numpy implementation at import time.
        ext_modules = []

setup(ext_modules=ext_modules)
