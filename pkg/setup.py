"""Build the optional Cython kernels.

The package imports and runs without the extension; ``gecc.kernels`` falls
back to NumPy implementations when ``gecc._ckernels`` is missing.
"""
import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("GECC_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None

    if cythonize is not None:
        extensions = [
            Extension(
                "gecc._ckernels",
                ["src/gecc/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # no -march=native / -ffast-math: FMA contraction would break
                # bit-for-bit agreement with the NumPy fallback
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ]
        ext_modules = cythonize(
            extensions,
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "initializedcheck": False,
                "nonecheck": False,
                "cdivision": True,
            },
        )

setup(ext_modules=ext_modules)
