"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a pure NumPy backend is selected
at import time); the build therefore tolerates a missing compiler or a
failed cythonize and falls back to a pure-Python install.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "inkpark.backends._ckernels",
                ["src/inkpark/backends/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level="3",
    )
except Exception as exc:  # pragma: no cover - exercised only on broken toolchains
    sys.stderr.write(f"inkpark: skipping compiled kernels ({exc}); "
                     "the pure-Python backend will be used\n")
    ext_modules = []

setup(ext_modules=ext_modules)
