"""Build script for the compiled kernel core.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile should not block a source install:
run with MAGROUTE_SKIP_EXT=1 to build pure-Python only.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("MAGROUTE_SKIP_EXT"):
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "magroute._kernels._core",
                ["src/magroute/_kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
