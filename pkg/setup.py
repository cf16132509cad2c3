"""Build script.  The Cython kernel is optional: if it fails to compile
the package still installs and falls back to the pure-Python kernel."""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "twostep._cd_kernel",
                sources=["src/twostep/_cd_kernel.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception:
    extensions = []

setup(ext_modules=extensions)
